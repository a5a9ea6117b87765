#include "echolab/echo_table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "echolab/errors.hpp"

namespace echolab {

namespace {

constexpr const char* kHeader = "source,mode,n,t,F,stderr";

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& field, int line, int column) {
  const std::string s = trim(field);
  double v = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (s.empty() || ec != std::errc() || ptr != last)
    throw ParseError("expected a number, got '" + s + "'", line, column);
  return v;
}

int parse_int(const std::string& field, int line, int column) {
  const std::string s = trim(field);
  int v = 0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (s.empty() || ec != std::errc() || ptr != last)
    throw ParseError("expected an integer, got '" + s + "'", line, column);
  return v;
}

}  // namespace

std::string to_string(ErrorMode mode) {
  switch (mode) {
    case ErrorMode::none: return "none";
    case ErrorMode::coherent: return "coherent";
    case ErrorMode::incoherent: return "incoherent";
    case ErrorMode::both: return "both";
  }
  return "none";
}

ErrorMode parse_error_mode(const std::string& name) {
  if (name == "none") return ErrorMode::none;
  if (name == "coherent") return ErrorMode::coherent;
  if (name == "incoherent") return ErrorMode::incoherent;
  if (name == "both") return ErrorMode::both;
  throw DomainError("unknown error mode '" + name + "'");
}

std::string to_string(Source source) {
  switch (source) {
    case Source::closed_form: return "closed-form";
    case Source::saddle: return "saddle";
    case Source::oracle: return "oracle";
    case Source::external: return "external";
  }
  return "external";
}

Source parse_source(const std::string& name) {
  if (name == "closed-form") return Source::closed_form;
  if (name == "saddle") return Source::saddle;
  if (name == "oracle") return Source::oracle;
  if (name == "external") return Source::external;
  throw DomainError("unknown source '" + name + "'");
}

std::vector<EchoRow> EchoTable::series(ErrorMode mode, int n) const {
  std::vector<EchoRow> out;
  std::copy_if(rows.begin(), rows.end(), std::back_inserter(out),
               [&](const EchoRow& r) { return r.mode == mode && r.n == n; });
  return out;
}

std::vector<std::pair<ErrorMode, int>> EchoTable::keys() const {
  std::vector<std::pair<ErrorMode, int>> out;
  for (const auto& r : rows) {
    const std::pair key{r.mode, r.n};
    if (std::find(out.begin(), out.end(), key) == out.end()) out.push_back(key);
  }
  return out;
}

void EchoTable::validate(double slack) const {
  for (const auto& [mode, n] : keys()) {
    double previous = -1.0;
    for (const auto& r : series(mode, n)) {
      if (!(r.t >= 0.0))
        throw DomainError("echo table: negative time in series " +
                          to_string(mode) + " n=" + std::to_string(n));
      if (!(r.t > previous))
        throw DomainError("echo table: times not strictly increasing in series " +
                          to_string(mode) + " n=" + std::to_string(n));
      if (!(r.F > 0.0 && r.F <= 1.0 + slack))
        throw DomainError("echo table: F outside (0, 1] at t=" +
                          format_double(r.t));
      previous = r.t;
    }
  }
}

void write_echo_csv(const EchoTable& table, std::ostream& out) {
  out << kEchoCsvVersion << '\n';
  for (const auto& [key, value] : table.metadata) {
    if (key.find_first_of("=\n") != std::string::npos ||
        value.find('\n') != std::string::npos)
      throw DomainError("metadata entries must be single-line key=value");
    out << "# " << key << '=' << value << '\n';
  }
  out << kHeader << '\n';
  for (const auto& r : table.rows) {
    out << to_string(r.source) << ',' << to_string(r.mode) << ',' << r.n << ','
        << format_double(r.t) << ',' << format_double(r.F) << ',';
    if (r.stderr_F) out << format_double(*r.stderr_F);
    out << '\n';
  }
}

void write_echo_csv(const EchoTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_echo_csv(table, out);
  if (!out) throw Error("failed writing " + path.string());
}

EchoTable read_echo_csv(std::istream& in) {
  EchoTable table;
  std::string raw;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.empty()) continue;
    if (raw[0] == '#') {
      if (header_seen) throw ParseError("comment after the column header", line_no, 1);
      if (line_no == 1) {
        if (raw != kEchoCsvVersion)
          throw ParseError("unsupported schema version '" + raw + "'", line_no, 1);
        continue;
      }
      const std::string body = trim(raw.substr(1));
      const auto eq = body.find('=');
      if (eq == std::string::npos)
        throw ParseError("metadata line must be '# key=value'", line_no, 1);
      table.metadata[trim(body.substr(0, eq))] = trim(body.substr(eq + 1));
      continue;
    }
    if (line_no == 1) throw ParseError("missing schema version line", 1, 1);
    if (!header_seen) {
      if (trim(raw) != kHeader)
        throw ParseError(std::string("expected header '") + kHeader + "'", line_no, 1);
      header_seen = true;
      continue;
    }

    std::vector<std::string> fields;
    std::vector<int> columns;
    std::size_t start = 0;
    while (true) {
      const auto comma = raw.find(',', start);
      columns.push_back(static_cast<int>(start) + 1);
      fields.push_back(raw.substr(start, comma == std::string::npos
                                             ? std::string::npos
                                             : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 6)
      throw ParseError("expected 6 fields, found " + std::to_string(fields.size()),
                       line_no, 1);

    EchoRow row;
    try {
      row.source = parse_source(trim(fields[0]));
    } catch (const DomainError& e) {
      throw ParseError(e.what(), line_no, columns[0]);
    }
    try {
      row.mode = parse_error_mode(trim(fields[1]));
    } catch (const DomainError& e) {
      throw ParseError(e.what(), line_no, columns[1]);
    }
    row.n = parse_int(fields[2], line_no, columns[2]);
    row.t = parse_double(fields[3], line_no, columns[3]);
    row.F = parse_double(fields[4], line_no, columns[4]);
    if (!trim(fields[5]).empty())
      row.stderr_F = parse_double(fields[5], line_no, columns[5]);
    if (row.n < 1) throw ParseError("n must be positive", line_no, columns[2]);
    table.rows.push_back(row);
  }
  if (line_no == 0) throw ParseError("empty file", 1, 1);
  if (!header_seen) throw ParseError("missing column header", line_no, 1);
  return table;
}

EchoTable read_echo_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_echo_csv(in);
}

}  // namespace echolab
