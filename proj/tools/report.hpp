#pragma once

// Report assembly and output for the command-line tool.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "lumpgeo/io.hpp"
#include "lumpgeo/version.hpp"

namespace lumpgeo::cli {

using io::json;
using table_json = nlohmann::ordered_json;

struct Globals {
  std::optional<double> tol;
  std::uint64_t seed = 42;
  std::string out_dir;
  std::string format = "json";
};

class Report {
 public:
  Report(std::string name, const Globals& g) : name_(std::move(name)), globals_(g) {}

  json result = json::object();
  table_json table = table_json::array();  ///< rows of flat objects in column order, the CSV body when present

  /// Threshold for a named check: --tol when given, else the documented default. Recorded in the report.
  double threshold(const std::string& check, double fallback) {
    double t = globals_.tol.value_or(fallback);
    tolerances_[check] = t;
    return t;
  }

  void check_le(const std::string& check, double value, double fallback) {
    double t = threshold(check, fallback);
    add(check, value, t, "<=", value <= t);
  }

  /// value ≥ −slack.
  void check_ge(const std::string& check, double value, double slack) {
    double t = -threshold(check, slack);
    add(check, value, t, ">=", value >= t);
  }

  /// Strict sign checks take no tolerance.
  void check_positive(const std::string& check, double value) { add(check, value, 0.0, ">", value > 0); }

  void check_true(const std::string& check, bool ok) {
    checks_[check] = {{"pass", ok}};
    all_ &= ok;
  }

  bool passed() const { return all_; }
  const std::string& name() const { return name_; }

  json to_json() const {
    json out;
    out["command"] = name_;
    out["version"] = version;
    out["seed"] = globals_.seed;
    out["tolerances"] = tolerances_;
    out["result"] = result;
    out["checks"] = checks_;
    out["pass"] = all_;
    if (!table.empty()) out["table"] = json::parse(table.dump());
    return out;
  }

 private:
  void add(const std::string& check, double value, double t, const char* rel, bool ok) {
    checks_[check] = {{"value", value}, {"threshold", t}, {"relation", rel}, {"pass", ok}};
    all_ &= ok;
  }

  std::string name_;
  Globals globals_;
  json tolerances_ = json::object();
  json checks_ = json::object();
  bool all_ = true;
};

namespace detail {

inline std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

template <class J>
inline std::string csv_cell(const J& v) {
  return csv_cell(v.is_string() ? v.template get<std::string>() : v.dump());
}

inline void flatten(const json& v, const std::string& path, std::ostringstream& out) {
  if (v.is_object() && !v.empty()) {
    for (const auto& [k, x] : v.items()) flatten(x, path.empty() ? k : path + "." + k, out);
  } else if (v.is_array() && !v.empty()) {
    for (std::size_t i = 0; i < v.size(); ++i) flatten(v[i], path + "[" + std::to_string(i) + "]", out);
  } else {
    out << csv_cell(path) << "," << csv_cell(v) << "\n";
  }
}

}  // namespace detail

/// The table when the report has one, otherwise every leaf as a key,value line.
inline std::string to_csv(const Report& r) {
  std::ostringstream out;
  if (!r.table.empty()) {
    std::vector<std::string> cols;
    for (const auto& [k, v] : r.table[0].items()) cols.push_back(k);
    for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << detail::csv_cell(cols[c]);
    out << "\n";
    for (const auto& row : r.table) {
      for (std::size_t c = 0; c < cols.size(); ++c)
        out << (c ? "," : "") << (row.contains(cols[c]) ? detail::csv_cell(row[cols[c]]) : "");
      out << "\n";
    }
    return out.str();
  }
  out << "key,value\n";
  detail::flatten(r.to_json(), "", out);
  return out.str();
}

inline std::string render(const Report& r, const Globals& g) {
  return g.format == "csv" ? to_csv(r) : r.to_json().dump(2) + "\n";
}

/// Prints to stdout, or writes <out-dir>/<name>.<format> when an output directory is set.
inline void emit(const Report& r, const Globals& g) {
  std::string text = render(r, g);
  if (g.out_dir.empty()) {
    std::cout << text;
    return;
  }
  std::error_code ec;
  std::filesystem::create_directories(g.out_dir, ec);
  if (ec) throw InvalidInput(g.out_dir + ": cannot create output directory (" + ec.message() + ")");
  std::string path = (std::filesystem::path(g.out_dir) / (r.name() + "." + g.format)).string();
  io::write_file(path, text);
  std::cerr << "wrote " << path << "\n";
}

/// One row per edge: from, to, value.
inline table_json edge_table(const StochasticKernel& p) {
  table_json t = table_json::array();
  for (const auto& [i, j] : p.graph().edges()) t.push_back({{"from", i}, {"to", j}, {"p", p(i, j)}});
  return t;
}

}  // namespace lumpgeo::cli
