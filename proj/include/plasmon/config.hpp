#pragma once

// JSON run configuration for the sweep driver.

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "plasmon/scenarios.hpp"

namespace plasmon {

using json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

struct DeltaGrid {
  double from = 1e-2, to = 1e-5;
  int per_decade = 3;
  bool operator==(const DeltaGrid&) const = default;
};

struct OutputPaths {
  std::optional<std::string> csv, svg;
  bool operator==(const OutputPaths&) const = default;
};

struct RunConfig {
  int schema_version = kSchemaVersion;
  Scenario scenario;
  std::vector<double> delta_list;
  std::optional<DeltaGrid> grid;  // when set, delta_list is its expansion
  int n_max = 24;
  int quadrature_exactness = 16;
  SweepThresholds thresholds;
  bool witnesses = true;
  OutputPaths output;

  // Highest harmonic degree any delta in the list will touch.
  int max_degree() const {
    int d = 0;
    for (const auto& t : scenario.source) d = std::max(d, t.n.value_or(0));
    if (scenario.scheduled())
      for (double x : delta_list) d = std::max(d, schedule_n_delta(scenario.R, x).n);
    return d;
  }

  void validate() const {
    if (schema_version != kSchemaVersion)
      fail(ErrorKind::validation, "unsupported schema_version", schema_version);
    scenario.validate();
    validate_deltas(delta_list);
    if (quadrature_exactness < 2) fail(ErrorKind::validation, "quadrature_exactness must be >= 2", quadrature_exactness);
    if (n_max < 2) fail(ErrorKind::validation, "n_max must be >= 2", n_max);
    if (max_degree() > n_max)
      fail(ErrorKind::unsupported_degree, "source degree exceeds n_max over this delta list", max_degree());
    const auto& t = thresholds;
    if (!(t.bounded_ratio > 1) || !(t.window_decades > 0) || !(t.monotone_tol >= 0) || !(t.sandwich_slack >= 0))
      fail(ErrorKind::validation, "bad verdict thresholds");
  }
};

namespace detail {

inline void only_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) fail(ErrorKind::validation, where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (const char* a : keys) known = known || k == a;
    if (!known) fail(ErrorKind::validation, "unknown key '" + k + "' in " + where);
  }
}

template <class T>
T get(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) fail(ErrorKind::validation, "missing key '" + std::string(key) + "' in " + where);
  if constexpr (std::is_same_v<T, int>)
    if (!j.at(key).is_number_integer())
      fail(ErrorKind::validation, "'" + std::string(key) + "' in " + where + " must be an integer");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::validation, "wrong type for '" + std::string(key) + "' in " + where);
  }
}

inline const json& section(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) fail(ErrorKind::validation, "missing key '" + std::string(key) + "' in " + where);
  return j.at(key);
}

template <class T>
T get_or(const json& j, const char* key, T dflt, const std::string& where) {
  return j.contains(key) ? get<T>(j, key, where) : dflt;
}

}  // namespace detail

inline json thresholds_json(const SweepThresholds& t) {
  return {{"slope", t.slope},
          {"bounded_ratio", t.bounded_ratio},
          {"window_decades", t.window_decades},
          {"monotone_tol", t.monotone_tol},
          {"sandwich_slack", t.sandwich_slack}};
}

inline SweepThresholds thresholds_from_json(const json& j) {
  detail::only_keys(j, {"slope", "bounded_ratio", "window_decades", "monotone_tol", "sandwich_slack"}, "thresholds");
  SweepThresholds t;
  t.slope = detail::get_or(j, "slope", t.slope, "thresholds");
  t.bounded_ratio = detail::get_or(j, "bounded_ratio", t.bounded_ratio, "thresholds");
  t.window_decades = detail::get_or(j, "window_decades", t.window_decades, "thresholds");
  t.monotone_tol = detail::get_or(j, "monotone_tol", t.monotone_tol, "thresholds");
  t.sandwich_slack = detail::get_or(j, "sandwich_slack", t.sandwich_slack, "thresholds");
  return t;
}

inline json to_json(const RunConfig& c) {
  const Scenario& s = c.scenario;
  json j;
  j["schema_version"] = c.schema_version;
  j["params"] = {{"lambda", s.params.lambda}, {"mu", s.params.mu}};
  j["geometry"] = {{"core_radius", s.core_radius ? json(*s.core_radius) : json(nullptr)}, {"R", s.R}};
  if (s.c_mode.type == CMode::Type::fixed)
    j["c_mode"] = {{"type", "fixed"}, {"value", s.c_mode.value}};
  else
    j["c_mode"] = {{"type", "schedule"}, {"family", s.c_mode.family}};
  j["q"] = s.q;
  json src = json::array();
  for (const auto& t : s.source)
    src.push_back({{"n", t.n ? json(*t.n) : json("n_delta")},
                   {"family", t.family},
                   {"k", t.k},
                   {"gamma_re", t.gamma.real()},
                   {"gamma_im", t.gamma.imag()}});
  j["source"] = src;
  if (c.grid)
    j["delta_list"] = {{"from", c.grid->from}, {"to", c.grid->to}, {"per_decade", c.grid->per_decade}};
  else
    j["delta_list"] = c.delta_list;
  j["n_max"] = c.n_max;
  j["quadrature_exactness"] = c.quadrature_exactness;
  j["thresholds"] = thresholds_json(c.thresholds);
  j["witnesses"] = c.witnesses;
  json out = json::object();
  if (c.output.csv) out["csv"] = *c.output.csv;
  if (c.output.svg) out["svg"] = *c.output.svg;
  j["output"] = out;
  return j;
}

// Parses and validates. Every failure is an Error of kind validation
// (or the kind raised by the module precondition that rejected it).
inline RunConfig config_from_json(const json& j) {
  using detail::get;
  using detail::get_or;
  detail::only_keys(j,
                    {"schema_version", "params", "geometry", "c_mode", "q", "source", "delta_list", "n_max",
                     "quadrature_exactness", "thresholds", "witnesses", "output"},
                    "config");
  RunConfig c;
  c.schema_version = get<int>(j, "schema_version", "config");
  Scenario& s = c.scenario;

  const json& p = detail::section(j, "params", "config");
  detail::only_keys(p, {"lambda", "mu"}, "params");
  s.params = {get<double>(p, "lambda", "params"), get<double>(p, "mu", "params")};

  const json& g = detail::section(j, "geometry", "config");
  detail::only_keys(g, {"core_radius", "R"}, "geometry");
  if (g.contains("core_radius") && !g.at("core_radius").is_null()) s.core_radius = get<double>(g, "core_radius", "geometry");
  s.R = get<double>(g, "R", "geometry");

  const json& cm = detail::section(j, "c_mode", "config");
  detail::only_keys(cm, {"type", "value", "family"}, "c_mode");
  const auto type = get<std::string>(cm, "type", "c_mode");
  if (type == "fixed") {
    s.c_mode.type = CMode::Type::fixed;
    s.c_mode.value = get<double>(cm, "value", "c_mode");
  } else if (type == "schedule") {
    s.c_mode.type = CMode::Type::schedule;
    s.c_mode.family = get<int>(cm, "family", "c_mode");
  } else {
    fail(ErrorKind::validation, "c_mode.type must be 'fixed' or 'schedule'");
  }

  s.q = get<double>(j, "q", "config");

  if (!j.contains("source") || !j.at("source").is_array()) fail(ErrorKind::validation, "source must be an array");
  for (const json& m : j.at("source")) {
    detail::only_keys(m, {"n", "family", "k", "gamma_re", "gamma_im"}, "source mode");
    SourceTemplate t;
    if (!m.contains("n")) fail(ErrorKind::validation, "missing key 'n' in source mode");
    if (m.at("n").is_string()) {
      if (m.at("n").get<std::string>() != "n_delta") fail(ErrorKind::validation, "source n must be an integer or 'n_delta'");
    } else {
      t.n = get<int>(m, "n", "source mode");
    }
    t.family = get<int>(m, "family", "source mode");
    t.k = get_or(m, "k", 0, "source mode");
    t.gamma = cd(get_or(m, "gamma_re", 1.0, "source mode"), get_or(m, "gamma_im", 0.0, "source mode"));
    s.source.push_back(t);
  }

  const json& d = detail::section(j, "delta_list", "config");
  if (d.is_array()) {
    for (const json& x : d) {
      if (!x.is_number()) fail(ErrorKind::validation, "delta_list entries must be numbers");
      c.delta_list.push_back(x.get<double>());
    }
  } else {
    detail::only_keys(d, {"from", "to", "per_decade"}, "delta_list");
    DeltaGrid gr{get<double>(d, "from", "delta_list"), get<double>(d, "to", "delta_list"),
                 get<int>(d, "per_decade", "delta_list")};
    c.grid = gr;
    c.delta_list = log_grid(gr.from, gr.to, gr.per_decade);
  }

  c.n_max = get_or(j, "n_max", c.n_max, "config");
  c.quadrature_exactness = get_or(j, "quadrature_exactness", c.quadrature_exactness, "config");
  if (j.contains("thresholds")) c.thresholds = thresholds_from_json(j.at("thresholds"));
  c.witnesses = get_or(j, "witnesses", c.witnesses, "config");
  if (j.contains("output")) {
    const json& o = j.at("output");
    detail::only_keys(o, {"csv", "svg"}, "output");
    if (o.contains("csv")) c.output.csv = get<std::string>(o, "csv", "output");
    if (o.contains("svg")) c.output.svg = get<std::string>(o, "svg", "output");
  }
  c.validate();
  return c;
}

inline RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::validation, std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot read config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline bool same_inputs(const RunConfig& a, const RunConfig& b) {
  return to_json(a) == to_json(b);
}

}  // namespace plasmon
