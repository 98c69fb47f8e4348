#pragma once

// Sweep report: CSV with a metadata header, optional log-log SVG.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "plasmon/config.hpp"

namespace plasmon {

inline constexpr const char* kCsvColumns = "delta,n_delta,c,E_delta,I_upper,J_lower,growth_exponent,verdict";

inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string report_csv(const SweepResult& res, const RunConfig& cfg) {
  if (res.rows.empty()) fail(ErrorKind::empty_result, "sweep produced no rows");
  std::ostringstream os;
  os << "# plasmon sweep\n";
  os << "# config: " << to_json(cfg).dump() << "\n";
  os << "# thresholds: " << thresholds_json(res.thresholds).dump() << "\n";
  json kinds = json::array();
  for (const auto& r : res.rows) kinds.push_back({r.upper_kind, r.lower_kind});
  os << "# witness_kinds: " << kinds.dump() << "\n";
  os << kCsvColumns << "\n";
  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    const auto& r = res.rows[i].report;
    const bool last = i + 1 == res.rows.size();
    os << fmt17(r.delta) << ',' << (r.n_delta ? std::to_string(*r.n_delta) : "") << ',' << fmt17(r.c_used) << ','
       << fmt17(r.E_delta) << ',' << (r.I_upper ? fmt17(*r.I_upper) : "") << ','
       << (r.J_lower ? fmt17(*r.J_lower) : "") << ',' << (last ? fmt17(res.growth_exponent) : "") << ','
       << (last ? verdict_name(res.verdict) : "") << "\n";
  }
  return os.str();
}

struct ParsedReport {
  RunConfig config;
  SweepThresholds thresholds;
  std::vector<EnergyReport> rows;
  double growth_exponent = 0;
  std::string verdict;
  int verdict_lines = 0;
};

namespace detail {
inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline double parse_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (used == s.size()) return x;
  } catch (...) {
  }
  fail(ErrorKind::validation, "bad number in report: '" + s + "'");
}
}  // namespace detail

inline ParsedReport parse_report(const std::string& text) {
  ParsedReport p;
  std::istringstream in(text);
  std::string line;
  bool have_config = false, have_header = false;
  while (std::getline(in, line)) {
    if (line.rfind("# config: ", 0) == 0) {
      p.config = parse_config(line.substr(10));
      have_config = true;
    } else if (line.rfind("# thresholds: ", 0) == 0) {
      p.thresholds = thresholds_from_json(json::parse(line.substr(14)));
    } else if (line.rfind("#", 0) == 0) {
      continue;
    } else if (!have_header) {
      if (line != kCsvColumns) fail(ErrorKind::validation, "unexpected CSV header");
      have_header = true;
    } else {
      const auto c = detail::split_csv(line);
      if (c.size() != 8) fail(ErrorKind::validation, "CSV row needs 8 cells");
      EnergyReport r;
      r.delta = detail::parse_double(c[0]);
      if (!c[1].empty()) r.n_delta = int(detail::parse_double(c[1]));
      r.c_used = detail::parse_double(c[2]);
      r.E_delta = detail::parse_double(c[3]);
      if (!c[4].empty()) r.I_upper = detail::parse_double(c[4]);
      if (!c[5].empty()) r.J_lower = detail::parse_double(c[5]);
      if (!c[7].empty()) {
        p.growth_exponent = detail::parse_double(c[6]);
        p.verdict = c[7];
        ++p.verdict_lines;
      }
      p.rows.push_back(r);
    }
  }
  if (!have_config || !have_header) fail(ErrorKind::validation, "report lacks config metadata or header");
  return p;
}

// Log-log plot of E (and the bounds when present) against 1 / delta.
inline std::string report_svg(const SweepResult& res) {
  if (res.rows.empty()) fail(ErrorKind::empty_result, "sweep produced no rows");
  const double W = 640, H = 420, L = 70, Rm = 20, T = 30, B = 50;
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  auto extend = [&](double d, double v) {
    if (!(v > 0)) return;
    const double x = -std::log10(d), y = std::log10(v);
    x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
  };
  for (const auto& r : res.rows) {
    extend(r.report.delta, r.report.E_delta);
    if (r.report.I_upper) extend(r.report.delta, *r.report.I_upper);
    if (r.report.J_lower) extend(r.report.delta, *r.report.J_lower);
  }
  if (x0 > x1) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  x0 = std::floor(x0), x1 = std::ceil(x1), y0 = std::floor(y0), y1 = std::ceil(y1);
  if (x1 == x0) x1 += 1;
  if (y1 == y0) y1 += 1;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - Rm); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  char buf[256];
  std::ostringstream os;
  std::snprintf(buf, sizeof buf, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\">\n", W, H);
  os << buf;
  std::snprintf(buf, sizeof buf, "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n", L,
                T, W - L - Rm, H - T - B);
  os << buf;
  for (double x = x0; x <= x1 + 0.5; x += 1) {
    std::snprintf(buf, sizeof buf, "<text x=\"%.2f\" y=\"%g\" font-size=\"11\" text-anchor=\"middle\">1e%d</text>\n", px(x),
                  H - B + 16, int(x));
    os << buf;
  }
  for (double y = y0; y <= y1 + 0.5; y += 1) {
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%.2f\" font-size=\"11\" text-anchor=\"end\">1e%d</text>\n", L - 6,
                  py(y) + 4, int(y));
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" font-size=\"12\" text-anchor=\"middle\">1/delta</text>\n",
                L + (W - L - Rm) / 2, H - 12);
  os << buf;
  std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"18\" font-size=\"12\">E_delta (black), I_upper (red), J_lower (blue): %s, slope %.4g</text>\n",
                L, verdict_name(res.verdict), res.growth_exponent);
  os << buf;
  auto series = [&](const char* color, auto get) {
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
    for (const auto& r : res.rows) {
      const auto v = get(r.report);
      if (!v || !(*v > 0)) continue;
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(-std::log10(r.report.delta)), py(std::log10(*v)));
      os << buf;
    }
    os << "\"/>\n";
  };
  series("black", [](const EnergyReport& r) { return std::optional<double>(r.E_delta); });
  series("red", [](const EnergyReport& r) { return r.I_upper; });
  series("blue", [](const EnergyReport& r) { return r.J_lower; });
  os << "</svg>\n";
  return os.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot open " + path + " for writing");
  out << text;
  out.close();
  if (!out) fail(ErrorKind::io, "write failed for " + path);
}

// Writes the CSV (and SVG when a path is given). Returns the CSV text.
inline std::string emit_report(const SweepResult& res, const RunConfig& cfg, const OutputPaths& paths) {
  const std::string csv = report_csv(res, cfg);
  if (paths.csv) write_file(*paths.csv, csv);
  if (paths.svg) write_file(*paths.svg, report_svg(res));
  return csv;
}

}  // namespace plasmon
