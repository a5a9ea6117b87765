#include "echolab/cli/run.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <ostream>
#include <set>
#include <sstream>

#include "echolab/calibrate.hpp"
#include "echolab/cli/config.hpp"
#include "echolab/cli/plot.hpp"
#include "echolab/ed_oracle.hpp"
#include "echolab/errors.hpp"
#include "echolab/scramblon_model.hpp"
#include "echolab/syk_saddle.hpp"

#ifndef ECHOLAB_VERSION
#define ECHOLAB_VERSION "unknown"
#endif

namespace echolab::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// A flag whose text is applied through the INI key of the same meaning.
struct Flag {
  std::string section;
  std::string key;
  std::optional<std::string> value;
};

struct Run {
  std::string command;
  std::vector<std::string> args;
  RunConfig cfg;
  std::set<std::string> explicit_keys;
  fs::path dir;
  std::vector<std::string> outputs;
  std::vector<std::string> messages;
  json inputs = json::array();
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;

  bool is_explicit(const std::string& key) const { return explicit_keys.count(key) > 0; }

  fs::path file(const std::string& name) {
    outputs.push_back(name);
    return dir / name;
  }

  void write_text(const std::string& name, const std::string& text) {
    std::ofstream f(file(name), std::ios::binary);
    if (!f) throw DomainError("cannot write " + (dir / name).string());
    f << text;
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// 64-bit FNV-1a of a file, recorded so inputs can be matched on re-runs.
std::string fingerprint(const fs::path& path, std::uintmax_t& bytes) {
  std::ifstream in(path, std::ios::binary);
  std::uint64_t h = 1469598103934665603ull;
  bytes = 0;
  for (std::istreambuf_iterator<char> it(in), end; it != end; ++it, ++bytes) {
    h ^= std::uint8_t(*it);
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

EchoTable read_input(Run& run) {
  const auto& path = run.cfg.input;
  if (path.empty()) throw DomainError(run.command + " needs --input");
  if (!fs::exists(path)) throw DomainError("input file not found: " + path.string());
  std::uintmax_t bytes = 0;
  const std::string hash = fingerprint(path, bytes);
  run.inputs.push_back({{"path", path.string()}, {"bytes", bytes}, {"fnv1a64", hash}});
  return read_echo_csv(path);
}

std::vector<double> require_times(const Run& run) {
  if (run.cfg.t_list.empty()) throw DomainError(run.command + " needs --t");
  return run.cfg.t_list;
}

void maybe_plot(Run& run, const std::vector<PlotLayer>& layers, const std::string& title) {
  if (!run.cfg.plot) return;
  PlotStyle style;
  style.title = title;
  render_plot_svg(layers, style, run.file("plot.svg"));
}

json fit_json(const calibrate::FitResult& fit) {
  json j;
  j["names"] = fit.names;
  j["estimate"] = std::vector<double>(fit.estimate.data(), fit.estimate.data() + fit.estimate.size());
  std::vector<double> sigma;
  for (const auto& name : fit.names) sigma.push_back(fit.sigma(name));
  j["sigma_approx"] = sigma;
  std::vector<std::vector<double>> cov;
  for (Eigen::Index r = 0; r < fit.covariance.rows(); ++r) {
    cov.emplace_back();
    for (Eigen::Index c = 0; c < fit.covariance.cols(); ++c) cov.back().push_back(fit.covariance(r, c));
  }
  j["covariance"] = cov;
  j["residual_norm"] = fit.residual_norm;
  j["points"] = fit.points;
  j["window"] = {fit.window.F_min, fit.window.F_max};
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["start_index"] = fit.start_index;
  j["starts"] = fit.starts;
  j["status"] = fit.status;
  j["warnings"] = fit.warnings;
  const auto& p = fit.params;
  j["params"] = {{"kappa", p.kappa},     {"gamma_I", p.gamma_I}, {"gamma_c", p.gamma_c},
                 {"delta_O", p.delta_O}, {"delta_d", p.delta_d}, {"b", p.b}};
  return j;
}

std::vector<double> dense_times(const EchoTable& table, int points = 281) {
  double hi = 0.0;
  for (const auto& row : table.rows) hi = std::max(hi, row.t);
  std::vector<double> t;
  for (int k = 0; k < points; ++k) t.push_back(hi * k / (points - 1));
  return t;
}

std::vector<int> series_n(const EchoTable& table, ErrorMode mode) {
  std::vector<int> n;
  for (const auto& [m, k] : table.keys())
    if (m == mode) n.push_back(k);
  std::sort(n.begin(), n.end());
  return n;
}

int predict(Run& run) {
  auto& cfg = run.cfg;
  if (cfg.n_list.empty()) cfg.n_list = cfg.mode == ErrorMode::incoherent || cfg.mode == ErrorMode::none
                                           ? std::vector<int>{1, 2, 4}
                                           : std::vector<int>{2};
  if (cfg.t_list.empty()) cfg.t_list = parse_time_list("0..14:0.1");
  const auto table = scramblon::predict_table(cfg.mode, cfg.n_list, cfg.t_list, cfg.scramblon);
  write_echo_csv(table, run.file("echo.csv"));
  maybe_plot(run, {{table, LayerKind::curves, "closed form"}}, "closed-form echo");
  return kSuccess;
}

int sd_sim(Run& run) {
  auto& cfg = run.cfg;
  if (cfg.n_list.empty()) cfg.n_list = {1, 2, 4};
  const auto t = require_times(run);
  saddle::SykParams p;
  p.J = cfg.J;
  p.V = cfg.V;
  p.error_mode = cfg.mode;
  auto opt = cfg.solver;
  opt.dt_target = cfg.dt_target;
  const auto res = saddle::sweep_echo(cfg.n_list, t, p, opt, cfg.threads);

  write_echo_csv(res.table, run.file("echo.csv"));
  std::ostringstream points;
  points << "n,t,intervals,ok,F,iterations,residual,message\n";
  fs::create_directories(run.dir / "logs");
  int failed = 0;
  for (const auto& pt : res.points) {
    points << pt.n << ',' << fmt(pt.t) << ',' << pt.intervals << ',' << (pt.ok ? 1 : 0) << ','
           << (pt.ok ? fmt(pt.F) : "") << ',' << pt.iterations << ',' << fmt(pt.residual) << ",\""
           << pt.message << "\"\n";
    std::ostringstream log;
    for (std::size_t k = 0; k < pt.trace.size(); ++k) log << k + 1 << ' ' << fmt(pt.trace[k]) << '\n';
    char name[64];
    std::snprintf(name, sizeof name, "logs/n%d_t%.6g.log", pt.n, pt.t);
    run.write_text(name, log.str());
    if (!pt.ok) {
      ++failed;
      run.messages.push_back("n=" + std::to_string(pt.n) + " t=" + fmt(pt.t) + ": " + pt.message);
      *run.err << "sd-sim: n=" << pt.n << " t=" << pt.t << ": " << pt.message << '\n';
    }
  }
  run.write_text("points.csv", points.str());
  if (!res.table.rows.empty())
    maybe_plot(run, {{res.table, LayerKind::points, "saddle"}}, "saddle-point echo");
  return failed ? kNumericalFailure : kSuccess;
}

int ed_sim(Run& run) {
  auto& cfg = run.cfg;
  if (cfg.n_list.empty()) cfg.n_list = {1, 2, 4};
  const auto t = require_times(run);
  const auto ms = oracle::build_majoranas(cfg.N);
  oracle::EdOptions opt;
  opt.realizations = cfg.realizations;
  opt.noise_trajectories = cfg.noise_trajectories;
  opt.dt_trotter = cfg.dt_trotter;
  opt.seed = cfg.seed;
  opt.threads = cfg.threads;

  EchoTable table;
  for (double time : t)
    for (const auto& s : oracle::echo_rounds_ed(cfg.n_list, time, ms, cfg.J, cfg.V, cfg.mode, opt)) {
      EchoRow row;
      row.source = Source::oracle;
      row.mode = s.mode;
      row.n = s.n;
      row.t = s.t;
      row.F = s.F;
      row.stderr_F = s.stderr_F;
      table.rows.push_back(row);
    }
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [](const EchoRow& a, const EchoRow& b) { return a.n < b.n; });
  table.metadata["N"] = std::to_string(cfg.N);
  table.metadata["J"] = fmt(cfg.J);
  table.metadata["V"] = fmt(cfg.V);
  table.metadata["seed"] = std::to_string(cfg.seed);
  table.metadata["realizations"] = std::to_string(cfg.realizations);
  write_echo_csv(table, run.file("echo.csv"));
  maybe_plot(run, {{table, LayerKind::points, "oracle"}}, "exact-diagonalization echo");
  return kSuccess;
}

calibrate::OptimizerOptions optimizer(const RunConfig& cfg) {
  calibrate::OptimizerOptions opt;
  opt.threads = cfg.threads;
  return opt;
}

calibrate::TwoRoundFitSpec two_round_spec(const Run& run, const EchoTable& table) {
  calibrate::TwoRoundFitSpec spec;
  if (run.is_explicit("model.mode")) {
    spec.mode = run.cfg.mode;
  } else if (!table.series(ErrorMode::both, 2).empty()) {
    spec.mode = ErrorMode::both;
  } else if (!table.series(ErrorMode::coherent, 2).empty()) {
    spec.mode = ErrorMode::coherent;
  } else {
    throw DomainError("two-round fit needs a both or coherent n = 2 series");
  }
  spec.syk_relations = run.cfg.syk_relations;
  spec.kappa = run.cfg.fix_kappa;
  spec.delta_O = run.cfg.fix_delta_O;
  return spec;
}

std::vector<int> incoherent_set(Run& run, const EchoTable& table) {
  if (run.cfg.n_list.empty()) run.cfg.n_list = series_n(table, ErrorMode::incoherent);
  if (run.cfg.n_list.empty()) throw DomainError("table has no incoherent series");
  return run.cfg.n_list;
}

int fit(Run& run) {
  const auto& cfg = run.cfg;
  const auto table = read_input(run);
  calibrate::FitResult result;
  EchoTable model;
  if (cfg.fit_kind == FitKind::incoherent) {
    const auto n_set = incoherent_set(run, table);
    result = calibrate::fit_incoherent_family(table, n_set, cfg.bounds, cfg.init_grid, cfg.window,
                                              optimizer(cfg));
    model = scramblon::predict_table(ErrorMode::incoherent, n_set, dense_times(table), result.params);
  } else {
    const auto spec = two_round_spec(run, table);
    result = calibrate::fit_full_two_round(table, spec, cfg.bounds, cfg.init_grid, cfg.window,
                                           optimizer(cfg));
    model = scramblon::predict_table(ErrorMode::both, {2}, dense_times(table), result.params);
  }
  run.write_text("fit.txt", calibrate::format_report(result));
  run.write_text("fit.json", fit_json(result).dump(2) + "\n");
  for (const auto& w : result.warnings) *run.err << "fit: warning: " << w << '\n';
  *run.out << calibrate::format_report(result);
  maybe_plot(run, {{table, LayerKind::points, "data"}, {model, LayerKind::curves, "fit"}},
             "echo fit");
  return kSuccess;
}

int analyze(Run& run) {
  const auto& cfg = run.cfg;
  const auto table = read_input(run);
  const auto n_set = incoherent_set(run, table);
  auto fit = calibrate::fit_incoherent_family(table, n_set, cfg.bounds, cfg.init_grid, cfg.window,
                                              optimizer(cfg));
  std::string report = calibrate::format_report(fit);
  json record;
  record["incoherent_fit"] = fit_json(fit);

  if (!table.series(ErrorMode::coherent, 2).empty()) {
    calibrate::TwoRoundFitSpec spec;
    spec.mode = ErrorMode::coherent;
    spec.syk_relations = cfg.syk_relations;
    spec.kappa = fit.params.kappa;
    spec.delta_O = fit.params.delta_O;
    const auto coherent = calibrate::fit_full_two_round(table, spec, cfg.bounds, cfg.init_grid,
                                                        cfg.window, optimizer(cfg));
    record["coherent_fit"] = fit_json(coherent);
    report += "\n" + calibrate::format_report(coherent);
    fit.params.gamma_c = coherent.params.gamma_c;
  }

  const auto rep = calibrate::crossover_analysis(table, fit);
  report += "\n" + calibrate::format_report(rep);
  std::ostringstream p;
  p << "t,p\n";
  for (std::size_t k = 0; k < rep.t.size(); ++k) p << fmt(rep.t[k]) << ',' << fmt(rep.p[k]) << '\n';
  const auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  record["crossover"] = {{"coherent", rep.coherent},
                         {"p_monotone", rep.p_monotone},
                         {"t_match_early", opt(rep.t_match_early)},
                         {"t_match_late", opt(rep.t_match_late)},
                         {"early_deviation", opt(rep.early_deviation)},
                         {"late_deviation", opt(rep.late_deviation)},
                         {"t_measured", opt(rep.t_measured)},
                         {"t_predicted", opt(rep.t_predicted)}};
  run.write_text("exponent.csv", p.str());
  run.write_text("analysis.txt", report);
  run.write_text("analysis.json", record.dump(2) + "\n");
  *run.out << report;
  maybe_plot(run, {{table, LayerKind::points, "data"}}, "round-scaling crossover");
  return kSuccess;
}

void write_manifest(Run& run, int code) {
  json m;
  m["tool"] = "echolab";
  m["version"] = ECHOLAB_VERSION;
  m["command"] = run.command;
  m["argv"] = run.args;
  m["seed"] = run.cfg.seed;
  m["threads"] = run.cfg.threads;
  m["config"] = to_ini(run.cfg);
  m["rerun"] = "echolab " + run.command + " --config " + (run.dir / "config.ini").string();
  m["inputs"] = run.inputs;
  m["outputs"] = run.outputs;
  m["exit_code"] = code;
  m["messages"] = run.messages;
  std::ofstream f(run.dir / "manifest.json", std::ios::binary);
  f << m.dump(2) << '\n';
}

using Handler = int (*)(Run&);

struct Command {
  const char* name;
  const char* help;
  Handler handler;
  std::vector<const char*> groups;
};

// Flag name, INI section, INI key, help text.
struct FlagSpec {
  const char* flag;
  const char* section;
  const char* key;
  const char* help;
};

const std::vector<std::pair<const char*, std::vector<FlagSpec>>>& flag_groups() {
  static const std::vector<std::pair<const char*, std::vector<FlagSpec>>> groups = {
      {"model",
       {{"--mode", "model", "mode", "error mode: none, coherent, incoherent, both"},
        {"--kappa", "model", "kappa", "Lyapunov exponent"},
        {"--gamma-I", "model", "gamma_I", "incoherent error strength"},
        {"--gamma-c", "model", "gamma_c", "coherent error strength"},
        {"--delta-O", "model", "delta_O", "probe scaling dimension"},
        {"--delta-d", "model", "delta_d", "error scaling dimension"},
        {"--b", "model", "b", "error ansatz constant"}}},
      {"syk",
       {{"--mode", "model", "mode", "error mode: none, coherent, incoherent, both"},
        {"--J", "model", "J", "SYK coupling"},
        {"--V", "model", "V", "error strength"}}},
      {"grid",
       {{"--n", "grid", "n", "round counts, e.g. 1,2,4"},
        {"--t", "grid", "t", "times: list a,b,c or range a..b[:step]"}}},
      {"solver",
       {{"--dt-target", "grid", "dt_target", "contour time step"},
        {"--tol", "solver", "tol", "Dyson residual tolerance"},
        {"--max-iter", "solver", "max_iter", "Dyson iteration cap"},
        {"--mixing", "solver", "mixing", "mixing fraction in (0, 1]"},
        {"--max-nodes", "solver", "max_nodes", "contour node cap"}}},
      {"oracle",
       {{"--N", "oracle", "N", "Majorana count"},
        {"--realizations", "oracle", "realizations", "coupling realizations"},
        {"--noise-trajectories", "oracle", "noise_trajectories", "noise draws per realization"},
        {"--dt-trotter", "oracle", "dt_trotter", "Brownian time step"}}},
      {"fit",
       {{"--input", "io", "input", "echo CSV to fit"},
        {"--kind", "fit", "kind", "incoherent or two-round"},
        {"--mode", "model", "mode", "series mode for two-round fits"},
        {"--n", "grid", "n", "incoherent round counts to fit (default: all)"},
        {"--F-min", "fit", "F_min", "fit window lower edge"},
        {"--F-max", "fit", "F_max", "fit window upper edge"},
        {"--fix-kappa", "fit", "fix_kappa", "hold kappa fixed (two-round)"},
        {"--fix-delta-O", "fit", "fix_delta_O", "hold delta_O fixed (two-round)"}}},
      {"analyze",
       {{"--input", "io", "input", "echo CSV with incoherent and coherent series"},
        {"--n", "grid", "n", "incoherent round counts to fit (default: all)"},
        {"--F-min", "fit", "F_min", "fit window lower edge"},
        {"--F-max", "fit", "F_max", "fit window upper edge"}}},
      {"io",
       {{"--output", "io", "output", "run directory"},
        {"--seed", "io", "seed", "master seed"},
        {"--threads", "io", "threads", "worker threads"}}},
  };
  return groups;
}

const std::vector<Command>& commands() {
  static const std::vector<Command> list = {
      {"predict", "Evaluate the closed forms on an (n, t) grid", predict, {"model", "grid", "io"}},
      {"sd-sim", "Solve the large-N saddle point for each (n, t)", sd_sim, {"syk", "grid", "solver", "io"}},
      {"ed-sim", "Exact-diagonalization echo at finite N", ed_sim, {"syk", "grid", "oracle", "io"}},
      {"fit", "Fit the closed forms to an echo table", fit, {"fit", "io"}},
      {"analyze", "Round-scaling crossover diagnostics", analyze, {"analyze", "io"}},
  };
  return list;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-round echo modelling, simulation and calibration", "echolab"};
  app.set_version_flag("--version", ECHOLAB_VERSION);
  app.require_subcommand(1, 1);

  std::deque<Flag> flags;
  std::string config_path;
  bool no_plot = false, free_shape = false;
  for (const auto& cmd : commands()) {
    auto* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->add_option("--config", config_path, "INI file; flags override its values")
        ->check(CLI::ExistingFile);
    sub->add_flag("--no-plot", no_plot, "skip plot.svg");
    if (std::string(cmd.name) == "fit")
      sub->add_flag("--free-shape", free_shape, "fit delta_d and b instead of the SYK relations");
    std::set<std::string> seen;
    for (const char* group : cmd.groups)
      for (const auto& [name, specs] : flag_groups()) {
        if (std::string(name) != group) continue;
        for (const auto& f : specs) {
          if (!seen.insert(f.flag).second) continue;
          flags.push_back({f.section, f.key, std::nullopt});
          sub->add_option(f.flag, flags.back().value, f.help);
        }
      }
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageError;
  }

  Run run;
  run.command = app.get_subcommands().front()->get_name();
  run.args = args;
  run.out = &out;
  run.err = &err;
  const Command& cmd = *std::find_if(commands().begin(), commands().end(),
                                     [&](const Command& c) { return run.command == c.name; });
  int code = kSuccess;
  try {
    if (!config_path.empty())
      for (const auto& key : load_ini(fs::path(config_path), run.cfg)) run.explicit_keys.insert(key);
    for (const auto& f : flags) {
      if (!f.value) continue;
      try {
        set_key(run.cfg, f.section, f.key, *f.value);
      } catch (const DomainError& e) {
        throw DomainError("[" + f.section + "] " + f.key + ": " + e.what());
      }
      run.explicit_keys.insert(f.section + "." + f.key);
    }
    if (no_plot) run.cfg.plot = false;
    if (free_shape) run.cfg.syk_relations = false;
    run.cfg.validate();
    run.dir = resolve_output(run.cfg, run.command);
    run.cfg.output = run.dir;
    fs::create_directories(run.dir);
    code = cmd.handler(run);
  } catch (const NonConvergenceError& e) {
    err << run.command << ": " << e.what() << '\n';
    run.messages.push_back(e.what());
    code = kNumericalFailure;
  } catch (const ConvergenceError& e) {
    err << run.command << ": " << e.what() << '\n';
    run.messages.push_back(e.what());
    code = kNumericalFailure;
  } catch (const DivergenceError& e) {
    err << run.command << ": " << e.what() << '\n';
    run.messages.push_back(e.what());
    code = kNumericalFailure;
  } catch (const std::exception& e) {
    err << run.command << ": " << e.what() << '\n';
    return kUsageError;
  }
  run.write_text("config.ini", to_ini(run.cfg));
  write_manifest(run, code);
  out << run.command << ": wrote " << run.dir.string() << '\n';
  return code;
}

}  // namespace echolab::cli
