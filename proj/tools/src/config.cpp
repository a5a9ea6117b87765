#include "echolab/cli/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "echolab/errors.hpp"

namespace echolab::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& text) {
  const std::string s = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw DomainError("not a number: '" + text + "'");
  return v;
}

long long to_integer(const std::string& text) {
  const std::string s = trim(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw DomainError("not an integer: '" + text + "'");
  return v;
}

bool to_bool(const std::string& text) {
  const std::string s = trim(text);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw DomainError("not a boolean: '" + text + "'");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) out += (k ? "," : "") + fmt(v[k]);
  return out;
}

std::vector<double> to_doubles(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(to_double(item));
  return out;
}

calibrate::Interval to_interval(const std::string& text) {
  const auto v = to_doubles(text);
  if (v.size() != 2) throw DomainError("bounds need two values 'lo,hi': '" + text + "'");
  return {v[0], v[1]};
}

std::string fmt(const calibrate::Interval& iv) { return fmt(iv.lo) + "," + fmt(iv.hi); }

struct Key {
  const char* section;
  const char* name;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      {"model", "mode", [](const RunConfig& c) { return to_string(c.mode); },
       [](RunConfig& c, const std::string& v) { c.mode = parse_error_mode(trim(v)); }},
      {"model", "J", [](const RunConfig& c) { return fmt(c.J); },
       [](RunConfig& c, const std::string& v) { c.J = to_double(v); }},
      {"model", "V", [](const RunConfig& c) { return fmt(c.V); },
       [](RunConfig& c, const std::string& v) { c.V = to_double(v); }},
      {"model", "kappa", [](const RunConfig& c) { return fmt(c.scramblon.kappa); },
       [](RunConfig& c, const std::string& v) { c.scramblon.kappa = to_double(v); }},
      {"model", "gamma_I", [](const RunConfig& c) { return fmt(c.scramblon.gamma_I); },
       [](RunConfig& c, const std::string& v) { c.scramblon.gamma_I = to_double(v); }},
      {"model", "gamma_c", [](const RunConfig& c) { return fmt(c.scramblon.gamma_c); },
       [](RunConfig& c, const std::string& v) { c.scramblon.gamma_c = to_double(v); }},
      {"model", "delta_O", [](const RunConfig& c) { return fmt(c.scramblon.delta_O); },
       [](RunConfig& c, const std::string& v) { c.scramblon.delta_O = to_double(v); }},
      {"model", "delta_d", [](const RunConfig& c) { return fmt(c.scramblon.delta_d); },
       [](RunConfig& c, const std::string& v) { c.scramblon.delta_d = to_double(v); }},
      {"model", "b", [](const RunConfig& c) { return fmt(c.scramblon.b); },
       [](RunConfig& c, const std::string& v) { c.scramblon.b = to_double(v); }},
      {"model", "syk_relations",
       [](const RunConfig& c) { return std::string(c.scramblon.syk_relations ? "true" : "false"); },
       [](RunConfig& c, const std::string& v) { c.scramblon.syk_relations = to_bool(v); }},

      {"grid", "n",
       [](const RunConfig& c) {
         std::string out;
         for (std::size_t k = 0; k < c.n_list.size(); ++k)
           out += (k ? "," : "") + std::to_string(c.n_list[k]);
         return out;
       },
       [](RunConfig& c, const std::string& v) { c.n_list = parse_int_list(v); }},
      {"grid", "t", [](const RunConfig& c) { return join(c.t_list); },
       [](RunConfig& c, const std::string& v) { c.t_list = parse_time_list(v); }},
      {"grid", "dt_target", [](const RunConfig& c) { return fmt(c.dt_target); },
       [](RunConfig& c, const std::string& v) { c.dt_target = to_double(v); }},

      {"solver", "tol", [](const RunConfig& c) { return fmt(c.solver.tol); },
       [](RunConfig& c, const std::string& v) { c.solver.tol = to_double(v); }},
      {"solver", "max_iter", [](const RunConfig& c) { return std::to_string(c.solver.max_iter); },
       [](RunConfig& c, const std::string& v) { c.solver.max_iter = int(to_integer(v)); }},
      {"solver", "mixing", [](const RunConfig& c) { return fmt(c.solver.mixing); },
       [](RunConfig& c, const std::string& v) { c.solver.mixing = to_double(v); }},
      {"solver", "max_nodes", [](const RunConfig& c) { return std::to_string(c.solver.max_nodes); },
       [](RunConfig& c, const std::string& v) { c.solver.max_nodes = std::size_t(to_integer(v)); }},

      {"oracle", "N", [](const RunConfig& c) { return std::to_string(c.N); },
       [](RunConfig& c, const std::string& v) { c.N = int(to_integer(v)); }},
      {"oracle", "realizations", [](const RunConfig& c) { return std::to_string(c.realizations); },
       [](RunConfig& c, const std::string& v) { c.realizations = int(to_integer(v)); }},
      {"oracle", "noise_trajectories",
       [](const RunConfig& c) { return std::to_string(c.noise_trajectories); },
       [](RunConfig& c, const std::string& v) { c.noise_trajectories = int(to_integer(v)); }},
      {"oracle", "dt_trotter", [](const RunConfig& c) { return fmt(c.dt_trotter); },
       [](RunConfig& c, const std::string& v) { c.dt_trotter = to_double(v); }},

      {"fit", "kind", [](const RunConfig& c) { return to_string(c.fit_kind); },
       [](RunConfig& c, const std::string& v) { c.fit_kind = parse_fit_kind(trim(v)); }},
      {"fit", "F_min", [](const RunConfig& c) { return fmt(c.window.F_min); },
       [](RunConfig& c, const std::string& v) { c.window.F_min = to_double(v); }},
      {"fit", "F_max", [](const RunConfig& c) { return fmt(c.window.F_max); },
       [](RunConfig& c, const std::string& v) { c.window.F_max = to_double(v); }},
      {"fit", "gamma_bounds", [](const RunConfig& c) { return fmt(c.bounds.gamma); },
       [](RunConfig& c, const std::string& v) { c.bounds.gamma = to_interval(v); }},
      {"fit", "kappa_bounds", [](const RunConfig& c) { return fmt(c.bounds.kappa); },
       [](RunConfig& c, const std::string& v) { c.bounds.kappa = to_interval(v); }},
      {"fit", "delta_O_bounds", [](const RunConfig& c) { return fmt(c.bounds.delta_O); },
       [](RunConfig& c, const std::string& v) { c.bounds.delta_O = to_interval(v); }},
      {"fit", "delta_d_bounds", [](const RunConfig& c) { return fmt(c.bounds.delta_d); },
       [](RunConfig& c, const std::string& v) { c.bounds.delta_d = to_interval(v); }},
      {"fit", "b_bounds", [](const RunConfig& c) { return fmt(c.bounds.b); },
       [](RunConfig& c, const std::string& v) { c.bounds.b = to_interval(v); }},
      {"fit", "kappa_init", [](const RunConfig& c) { return join(c.init_grid.kappa); },
       [](RunConfig& c, const std::string& v) { c.init_grid.kappa = to_doubles(v); }},
      {"fit", "gamma_init", [](const RunConfig& c) { return join(c.init_grid.gamma); },
       [](RunConfig& c, const std::string& v) { c.init_grid.gamma = to_doubles(v); }},
      {"fit", "delta_O_init", [](const RunConfig& c) { return join(c.init_grid.delta_O); },
       [](RunConfig& c, const std::string& v) { c.init_grid.delta_O = to_doubles(v); }},
      {"fit", "coherent_fraction_init",
       [](const RunConfig& c) { return join(c.init_grid.coherent_fraction); },
       [](RunConfig& c, const std::string& v) { c.init_grid.coherent_fraction = to_doubles(v); }},
      {"fit", "fix_kappa",
       [](const RunConfig& c) { return c.fix_kappa ? fmt(*c.fix_kappa) : std::string(); },
       [](RunConfig& c, const std::string& v) {
         c.fix_kappa = trim(v).empty() ? std::nullopt : std::optional(to_double(v));
       }},
      {"fit", "fix_delta_O",
       [](const RunConfig& c) { return c.fix_delta_O ? fmt(*c.fix_delta_O) : std::string(); },
       [](RunConfig& c, const std::string& v) {
         c.fix_delta_O = trim(v).empty() ? std::nullopt : std::optional(to_double(v));
       }},
      {"fit", "syk_relations",
       [](const RunConfig& c) { return std::string(c.syk_relations ? "true" : "false"); },
       [](RunConfig& c, const std::string& v) { c.syk_relations = to_bool(v); }},

      {"io", "input", [](const RunConfig& c) { return c.input.string(); },
       [](RunConfig& c, const std::string& v) { c.input = trim(v); }},
      {"io", "output", [](const RunConfig& c) { return c.output.string(); },
       [](RunConfig& c, const std::string& v) { c.output = trim(v); }},
      {"io", "seed", [](const RunConfig& c) { return std::to_string(c.seed); },
       [](RunConfig& c, const std::string& v) {
         const long long s = to_integer(v);
         if (s < 0) throw DomainError("seed must be non-negative");
         c.seed = std::uint64_t(s);
       }},
      {"io", "plot", [](const RunConfig& c) { return std::string(c.plot ? "true" : "false"); },
       [](RunConfig& c, const std::string& v) { c.plot = to_bool(v); }},
      {"io", "threads", [](const RunConfig& c) { return std::to_string(c.threads); },
       [](RunConfig& c, const std::string& v) { c.threads = int(to_integer(v)); }},
  };
  return table;
}

const Key* find_key(const std::string& section, const std::string& name) {
  for (const auto& k : keys())
    if (section == k.section && name == k.name) return &k;
  return nullptr;
}

}  // namespace

std::string to_string(FitKind kind) {
  return kind == FitKind::incoherent ? "incoherent" : "two-round";
}

FitKind parse_fit_kind(const std::string& name) {
  if (name == "incoherent") return FitKind::incoherent;
  if (name == "two-round") return FitKind::two_round;
  throw DomainError("unknown fit kind '" + name + "' (incoherent, two-round)");
}

void RunConfig::validate() const {
  for (int n : n_list)
    if (n < 1) throw DomainError("grid.n entries must be positive");
  for (double t : t_list)
    if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("grid.t entries must be >= 0");
  if (!(dt_target > 0.0)) throw DomainError("grid.dt_target must be positive");
  if (!(J > 0.0)) throw DomainError("model.J must be positive");
  if (!(V >= 0.0)) throw DomainError("model.V must be non-negative");
  if (N < 4 || N % 2) throw DomainError("oracle.N must be even and >= 4");
  if (realizations < 1) throw DomainError("oracle.realizations must be positive");
  if (noise_trajectories < 1) throw DomainError("oracle.noise_trajectories must be positive");
  if (!(dt_trotter > 0.0)) throw DomainError("oracle.dt_trotter must be positive");
  if (threads < 1) throw DomainError("io.threads must be positive");
}

void set_key(RunConfig& cfg, const std::string& section, const std::string& key,
             const std::string& value) {
  const Key* k = find_key(section, key);
  if (!k) throw DomainError("unknown key [" + section + "] " + key);
  k->set(cfg, value);
}

std::vector<std::string> load_ini(std::istream& in, RunConfig& cfg) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(e.message(), int(e.line()));
  }
  std::vector<std::string> set;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ParseError("key '" + section + "' outside a section", 0);
    for (const auto& [name, value] : body) {
      try {
        set_key(cfg, section, name, value.data());
      } catch (const DomainError& e) {
        throw ParseError(e.what(), 0);
      }
      set.push_back(section + "." + name);
    }
  }
  return set;
}

std::vector<std::string> load_ini(const std::filesystem::path& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open config file " + path.string());
  return load_ini(in, cfg);
}

std::string to_ini(const RunConfig& cfg) {
  std::string out, section;
  for (const auto& k : keys()) {
    if (section != k.section) {
      section = k.section;
      out += (out.empty() ? "[" : "\n[") + section + "]\n";
    }
    out += std::string(k.name) + " = " + k.get(cfg) + "\n";
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (const auto& item : split(text, ',')) {
    if (item.empty()) continue;
    out.push_back(int(to_integer(item)));
  }
  return out;
}

std::vector<double> parse_time_list(const std::string& text) {
  const std::string s = trim(text);
  if (s.empty()) return {};
  const auto dots = s.find("..");
  if (dots == std::string::npos) return to_doubles(s);

  const double lo = to_double(s.substr(0, dots));
  std::string rest = s.substr(dots + 2);
  double step = 1.0;
  if (const auto colon = rest.find(':'); colon != std::string::npos) {
    step = to_double(rest.substr(colon + 1));
    rest = rest.substr(0, colon);
  }
  const double hi = to_double(rest);
  if (!(step > 0.0)) throw DomainError("range step must be positive");
  if (!(hi >= lo)) throw DomainError("range end below its start");
  std::vector<double> out;
  const long count = long(std::floor((hi - lo) / step + 1e-9));
  for (long k = 0; k <= count; ++k) out.push_back(lo + double(k) * step);
  return out;
}

std::filesystem::path resolve_output(const RunConfig& cfg, const std::string& command) {
  if (!cfg.output.empty()) return cfg.output;
  if (const char* root = std::getenv(kOutputRootEnv); root && *root)
    return std::filesystem::path(root) / command;
  return std::filesystem::path(command);
}

}  // namespace echolab::cli
