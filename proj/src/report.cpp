#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ltce/experiment.hpp"

namespace ltce {

namespace fs = std::filesystem;

namespace {

std::string shortest(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

template <class T>
void push_unique(std::vector<T>& xs, const T& v) {
  if (std::find(xs.begin(), xs.end(), v) == xs.end()) xs.push_back(v);
}

// Successful records grouped by sweep value, aggregated per method.
struct Grid {
  std::string axis;
  std::vector<std::string> methods;  // first-appearance order
  std::vector<double> values;        // first-appearance order
  std::map<double, AggregateResult> cells;
};

Grid build_grid(const std::vector<ResultRecord>& records) {
  Grid g;
  std::map<double, std::vector<TrialResult>> trials;
  for (const auto& r : records) {
    if (g.axis.empty()) g.axis = r.sweep_axis;
    push_unique(g.methods, r.method);
    push_unique(g.values, r.sweep_value);
    if (!r.error.empty() || !r.eps_ate || !r.eps_cate) continue;
    trials[r.sweep_value].push_back({r.method, *r.eps_ate, *r.eps_cate, r.trial, 0});
  }
  for (const auto& [v, ts] : trials) g.cells[v] = aggregate(ts);
  return g;
}

const MethodAggregate* cell(const Grid& g, double value, const std::string& method) {
  const auto c = g.cells.find(value);
  if (c == g.cells.end()) return nullptr;
  const auto m = c->second.methods.find(method);
  return m == c->second.methods.end() ? nullptr : &m->second;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

void emit_table(const std::vector<ResultRecord>& records, const fs::path& out) {
  if (records.empty()) throw std::invalid_argument("no result records");
  const Grid g = build_grid(records);
  const std::string axis = g.axis == "none" ? "value" : g.axis;

  std::ostringstream mean, sd;
  mean << "method";
  for (double v : g.values) {
    mean << ',' << axis << '=' << shortest(v) << ":eps_cate," << axis << '=' << shortest(v) << ":eps_ate";
  }
  mean << '\n';
  sd << mean.str();
  for (const auto& m : g.methods) {
    mean << m;
    sd << m;
    for (double v : g.values) {
      const MethodAggregate* a = cell(g, v, m);
      if (!a) {
        mean << ",NA,NA";
        sd << ",NA,NA";
        continue;
      }
      mean << ',' << shortest(a->eps_cate.mean) << ',' << shortest(a->eps_ate.mean);
      sd << ',' << shortest(a->eps_cate.std) << ',' << shortest(a->eps_ate.std);
    }
    mean << '\n';
    sd << '\n';
  }
  write_text(out, mean.str());
  fs::path std_path = out;
  std_path.replace_filename(out.stem().string() + "_std" + out.extension().string());
  write_text(std_path, sd.str());
}

void emit_table(const fs::path& dir, const fs::path& out) { emit_table(read_results(dir), out); }

std::string render_plot(const std::vector<ResultRecord>& records, const std::string& axis, const std::string& metric) {
  if (metric != "eps_cate" && metric != "eps_ate") throw std::invalid_argument("unknown metric: " + metric);
  std::vector<ResultRecord> on_axis;
  for (const auto& r : records) {
    if (r.sweep_axis == axis) on_axis.push_back(r);
  }
  if (on_axis.empty()) throw std::invalid_argument("no results on sweep axis '" + axis + "'");
  const Grid g = build_grid(on_axis);
  std::vector<double> xs = g.values;
  std::sort(xs.begin(), xs.end());

  struct Series {
    std::string method;
    std::vector<std::pair<double, double>> points;
  };
  std::vector<Series> series;
  double y_max = 0.0;
  for (const auto& m : g.methods) {
    Series s{m, {}};
    for (double x : xs) {
      const MethodAggregate* a = cell(g, x, m);
      if (!a) continue;
      const double y = metric == "eps_cate" ? a->eps_cate.mean : a->eps_ate.mean;
      s.points.emplace_back(x, y);
      y_max = std::max(y_max, y);
    }
    series.push_back(std::move(s));
  }
  if (y_max <= 0.0) y_max = 1.0;
  y_max *= 1.05;
  double x_lo = xs.front(), x_hi = xs.back();
  if (x_hi == x_lo) {
    x_lo -= 0.5;
    x_hi += 0.5;
  }

  const double W = 640, H = 420, L = 70, R = 170, Tp = 30, B = 50;
  const double pw = W - L - R, ph = H - Tp - B;
  auto px = [&](double x) { return L + (x - x_lo) / (x_hi - x_lo) * pw; };
  auto py = [&](double y) { return Tp + ph - y / y_max * ph; };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << Tp + ph << "\" x2=\"" << L + pw << "\" y2=\"" << Tp + ph
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << Tp << "\" x2=\"" << L << "\" y2=\"" << Tp + ph << "\" stroke=\"black\"/>\n";
  for (double x : xs) {
    svg << "<text x=\"" << fixed(px(x), 2) << "\" y=\"" << Tp + ph + 18 << "\" text-anchor=\"middle\">" << shortest(x)
        << "</text>\n";
  }
  for (int k = 0; k <= 4; ++k) {
    const double y = y_max * k / 4.0;
    svg << "<text x=\"" << L - 6 << "\" y=\"" << fixed(py(y) + 4, 2) << "\" text-anchor=\"end\">" << fixed(y, 3)
        << "</text>\n";
  }
  svg << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">" << axis << "</text>\n";
  svg << "<text x=\"16\" y=\"" << Tp + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << Tp + ph / 2 << ")\">" << metric << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = colors[k % 8];
    svg << "<polyline data-method=\"" << series[k].method << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < series[k].points.size(); ++i) {
      if (i) svg << ' ';
      svg << fixed(px(series[k].points[i].first), 2) << ',' << fixed(py(series[k].points[i].second), 2);
    }
    svg << "\"/>\n";
    const double ly = Tp + 10 + 18.0 * static_cast<double>(k);
    svg << "<line x1=\"" << L + pw + 15 << "\" y1=\"" << ly << "\" x2=\"" << L + pw + 35 << "\" y2=\"" << ly
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << L + pw + 40 << "\" y=\"" << ly + 4 << "\">" << series[k].method << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void emit_plot(const fs::path& dir, const std::string& axis, const fs::path& out, const std::string& metric) {
  write_text(out, render_plot(read_results(dir), axis, metric));
}

}  // namespace ltce
