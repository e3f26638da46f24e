#pragma once

/// Plain-text plumbing: flat key = value configs, CSV with round-trippable
/// doubles, and a minimal SVG line plot.

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tumor/diagnostics.hpp"
#include "tumor/solver_core.hpp"

namespace tumor::io {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

/// key = value lines; '#' starts a comment; later duplicates win.
inline std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// Base-10 real with optional exponent; the whole string must be consumed.
inline double parse_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v, std::chars_format::general);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    throw ConfigError("key '" + key + "': not a finite number: '" + s + "'");
  return v;
}

inline int parse_int(const std::string& key, const std::string& s) {
  int v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v, 10);
  if (ec != std::errc() || ptr != end) throw ConfigError("key '" + key + "': not an integer: '" + s + "'");
  return v;
}

/// Comma separated integers, e.g. "8,10,12".
inline std::vector<int> parse_int_list(const std::string& key, const std::string& s) {
  std::vector<int> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) out.push_back(parse_int(key, trim(item)));
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

// ---------------------------------------------------------------------------
// CSV

/// Shortest form is not needed; 17 significant digits always round-trips.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.header.size(); ++i) out += (i ? "," : "") + t.header[i];
  out += '\n';
  for (const auto& row : t.rows) {
    if (row.size() != t.header.size()) throw IoError("CSV row width does not match the header");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_double(row[i]);
    }
    out += '\n';
  }
  return out;
}

inline Table parse_csv(const std::string& text) {
  Table t;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty CSV");
  {
    std::istringstream h(line);
    std::string cell;
    while (std::getline(h, cell, ',')) t.header.push_back(cell);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream r(line);
    std::string cell;
    while (std::getline(r, cell, ',')) {
      if (cell == "nan" || cell == "-nan") {
        row.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size()) throw IoError("bad CSV cell '" + cell + "'");
      row.push_back(v);
    }
    if (row.size() != t.header.size()) throw IoError("CSV row width does not match the header");
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path);
  f << text;
  if (!f) throw IoError("write failed for " + path);
}

inline void write_csv(const std::string& path, const Table& t) { write_text(path, to_csv(t)); }

/// Field snapshot, row-major (x fastest).
inline Table field_table(const SimState& s, const Grid2D& g) {
  Table t{{"x", "y", "rho", "c"}, {}};
  t.rows.reserve(g.size());
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) t.rows.push_back({g.x(i), g.y(j), s.rho(i, j), s.c(i, j)});
  return t;
}

/// t,R_mean,R_analytic,delta_<m>...,mass,xbar,ybar
inline Table trace_table(const BoundaryTrace& tr, const std::vector<double>& analytic) {
  Table t;
  t.header = {"t", "R_mean", "R_analytic"};
  for (const auto& [m, values] : tr.mode_amplitudes) t.header.push_back("delta_" + std::to_string(m));
  t.header.insert(t.header.end(), {"mass", "xbar", "ybar"});
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    std::vector<double> row{tr.times[i], tr.radius_mean[i],
                            i < analytic.size() ? analytic[i] : std::numeric_limits<double>::quiet_NaN()};
    for (const auto& [m, values] : tr.mode_amplitudes) row.push_back(values[i]);
    row.insert(row.end(), {tr.mass[i], tr.centroid_path[i].first, tr.centroid_path[i].second});
    t.rows.push_back(std::move(row));
  }
  return t;
}

// ---------------------------------------------------------------------------
// SVG

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Self-contained line plot; non-finite points break the polyline.
inline std::string svg_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                            const std::vector<Series>& series, bool log_x = false) {
  const double W = 640, H = 420, ml = 70, mr = 140, mt = 40, mb = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  auto tx = [&](double x) { return log_x ? std::log10(x) : x; };
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.y[i]) || !std::isfinite(s.x[i]) || (log_x && !(s.x[i] > 0.0))) continue;
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (!(x1 > x0)) { x0 -= 1.0; x1 += 1.0; }
  if (!(y1 > y0)) { y0 -= 1.0; y1 += 1.0; }
  auto px = [&](double x) { return ml + (tx(x) - x0) / (x1 - x0) * (W - ml - mr); };
  auto py = [&](double y) { return H - mb - (y - y0) / (y1 - y0) * (H - mt - mb); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  std::ostringstream o;
  o.precision(6);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n"
    << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr << "\" height=\"" << H - mt - mb
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  if (y0 < 0.0 && y1 > 0.0)
    o << "<line x1=\"" << ml << "\" x2=\"" << W - mr << "\" y1=\"" << py(0.0) << "\" y2=\"" << py(0.0)
      << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
  auto label = [&](double v) {
    std::ostringstream s;
    s.precision(4);
    s << v;
    return s.str();
  };
  o << "<text x=\"" << ml << "\" y=\"" << H - mb + 16 << "\" font-size=\"11\">"
    << label(log_x ? std::pow(10.0, x0) : x0) << "</text>\n"
    << "<text x=\"" << W - mr << "\" y=\"" << H - mb + 16 << "\" font-size=\"11\" text-anchor=\"end\">"
    << label(log_x ? std::pow(10.0, x1) : x1) << "</text>\n"
    << "<text x=\"" << ml - 4 << "\" y=\"" << H - mb << "\" font-size=\"11\" text-anchor=\"end\">" << label(y0)
    << "</text>\n"
    << "<text x=\"" << ml - 4 << "\" y=\"" << mt + 10 << "\" font-size=\"11\" text-anchor=\"end\">" << label(y1)
    << "</text>\n"
    << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"13\">"
    << xlabel << (log_x ? " (log)" : "") << "</text>\n"
    << "<text x=\"16\" y=\"" << (mt + H - mb) / 2 << "\" font-size=\"13\" transform=\"rotate(-90 16 "
    << (mt + H - mb) / 2 << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* col = colors[k % 8];
    std::string pts;
    auto flush = [&] {
      if (!pts.empty())
        o << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"" << pts << "\"/>\n";
      pts.clear();
    };
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.y[i]) || (log_x && !(s.x[i] > 0.0))) {
        flush();
        continue;
      }
      std::ostringstream p;
      p.precision(6);
      p << px(s.x[i]) << "," << py(s.y[i]) << " ";
      pts += p.str();
    }
    flush();
    o << "<text x=\"" << W - mr + 8 << "\" y=\"" << mt + 16 + 16 * k << "\" font-size=\"12\" fill=\"" << col
      << "\">" << s.name << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace tumor::io
