#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "slan/error.hpp"
#include "slan/experiments.hpp"

namespace slan::exp {

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double sq = 0.0;
  for (double x : xs) sq += (x - mean) * (x - mean);
  return {mean, std::sqrt(sq / static_cast<double>(xs.size() - 1))};
}

double ci95_halfwidth(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const auto [mean, sd] = mean_std(xs);
  const boost::math::students_t dist(static_cast<double>(xs.size() - 1));
  const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
  return t * sd / std::sqrt(static_cast<double>(xs.size()));
}

std::string format_pct(double mean, double std) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f ± %.2f", 100.0 * mean, 100.0 * std);
  return buf;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::not_found, "cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (line.back() == ',') fields.emplace_back();
    rows.push_back(std::move(fields));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// SVG

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b"};

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

struct Frame {
  double width = 640, height = 400;
  double left = 70, right = 150, top = 40, bottom = 60;
  double x0, x1, y0, y1;

  double px(double x) const {
    return left + (x1 == x0 ? 0.5 : (x - x0) / (x1 - x0)) * (width - left - right);
  }
  double py(double y) const {
    return height - bottom - (y1 == y0 ? 0.5 : (y - y0) / (y1 - y0)) * (height - top - bottom);
  }
};

void y_range(const std::vector<Series>& series, double& lo, double& hi) {
  lo = std::numeric_limits<double>::infinity();
  hi = -lo;
  for (const Series& s : series) {
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      const double e = i < s.err.size() ? s.err[i] : 0.0;
      lo = std::min(lo, s.y[i] - e);
      hi = std::max(hi, s.y[i] + e);
    }
  }
  if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
  const double pad = std::max(1e-3, 0.08 * (hi - lo));
  lo -= pad;
  hi += pad;
}

void axes(std::ostringstream& o, const Frame& f, const std::string& title,
          const std::string& x_label, const std::string& y_label) {
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\""
    << f.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << f.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
    << esc(title) << "</text>\n";
  const double xb = f.left, xe = f.width - f.right, yb = f.height - f.bottom, ye = f.top;
  o << "<line x1=\"" << xb << "\" y1=\"" << yb << "\" x2=\"" << xe << "\" y2=\"" << yb
    << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << xb << "\" y1=\"" << yb << "\" x2=\"" << xb << "\" y2=\"" << ye
    << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = f.y0 + (f.y1 - f.y0) * k / 4.0;
    o << "<text x=\"" << xb - 6 << "\" y=\"" << num(f.py(v) + 4)
      << "\" text-anchor=\"end\">" << num(v) << "</text>\n";
  }
  if (!x_label.empty()) {
    o << "<text x=\"" << (xb + xe) / 2 << "\" y=\"" << f.height - 15
      << "\" text-anchor=\"middle\">" << esc(x_label) << "</text>\n";
  }
  o << "<text x=\"18\" y=\"" << (yb + ye) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
    << (yb + ye) / 2 << ")\">" << esc(y_label) << "</text>\n";
}

void legend(std::ostringstream& o, const Frame& f, const std::vector<Series>& series) {
  for (std::size_t k = 0; k < series.size(); ++k) {
    const double y = f.top + 10 + 18.0 * static_cast<double>(k);
    const double x = f.width - f.right + 15;
    o << "<rect x=\"" << x << "\" y=\"" << y - 9 << "\" width=\"12\" height=\"12\" fill=\""
      << kPalette[k % 6] << "\"/>\n";
    o << "<text x=\"" << x + 18 << "\" y=\"" << y + 2 << "\">" << esc(series[k].name)
      << "</text>\n";
  }
}

}  // namespace

std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<double>& x,
                           const std::vector<Series>& series) {
  Frame f;
  f.x0 = x.empty() ? 0.0 : *std::min_element(x.begin(), x.end());
  f.x1 = x.empty() ? 1.0 : *std::max_element(x.begin(), x.end());
  y_range(series, f.y0, f.y1);
  std::ostringstream o;
  axes(o, f, title, x_label, y_label);
  for (double xv : x) {
    o << "<text x=\"" << num(f.px(xv)) << "\" y=\"" << f.height - f.bottom + 16
      << "\" text-anchor=\"middle\">" << num(xv) << "</text>\n";
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    const char* color = kPalette[k % 6];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.y.size() && i < x.size(); ++i) {
      o << num(f.px(x[i])) << ',' << num(f.py(s.y[i])) << ' ';
    }
    o << "\"/>\n";
    for (std::size_t i = 0; i < s.y.size() && i < x.size(); ++i) {
      o << "<circle cx=\"" << num(f.px(x[i])) << "\" cy=\"" << num(f.py(s.y[i]))
        << "\" r=\"3\" fill=\"" << color << "\"/>\n";
      if (i < s.err.size() && s.err[i] > 0.0) {
        o << "<line x1=\"" << num(f.px(x[i])) << "\" y1=\"" << num(f.py(s.y[i] - s.err[i]))
          << "\" x2=\"" << num(f.px(x[i])) << "\" y2=\"" << num(f.py(s.y[i] + s.err[i]))
          << "\" stroke=\"" << color << "\"/>\n";
      }
    }
  }
  legend(o, f, series);
  o << "</svg>\n";
  return o.str();
}

std::string bar_chart_svg(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<Series>& series) {
  Frame f;
  f.width = std::max(640.0, 40.0 * static_cast<double>(labels.size() * series.size()) + 220.0);
  f.x0 = 0.0;
  f.x1 = static_cast<double>(labels.size());
  f.y0 = 0.0;
  f.y1 = 0.0;
  for (const Series& s : series) {
    for (double v : s.y) f.y1 = std::max(f.y1, v);
  }
  f.y1 = f.y1 > 0.0 ? 1.1 * f.y1 : 1.0;
  std::ostringstream o;
  axes(o, f, title, "", "share");
  const double slot = (f.width - f.left - f.right) / std::max<double>(1.0, f.x1);
  const double bar = 0.8 * slot / static_cast<double>(std::max<std::size_t>(1, series.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double base = f.left + slot * static_cast<double>(i) + 0.1 * slot;
    for (std::size_t k = 0; k < series.size(); ++k) {
      if (i >= series[k].y.size()) continue;
      const double v = series[k].y[i];
      o << "<rect x=\"" << num(base + bar * static_cast<double>(k)) << "\" y=\""
        << num(f.py(v)) << "\" width=\"" << num(bar) << "\" height=\""
        << num(f.py(0.0) - f.py(v)) << "\" fill=\"" << kPalette[k % 6] << "\"/>\n";
    }
    o << "<text x=\"" << num(base + 0.4 * slot) << "\" y=\"" << f.height - f.bottom + 16
      << "\" text-anchor=\"middle\">" << esc(labels[i]) << "</text>\n";
  }
  legend(o, f, series);
  o << "</svg>\n";
  return o.str();
}

}  // namespace slan::exp
