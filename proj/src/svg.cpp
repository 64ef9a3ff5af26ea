#include "bnpirt/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace bnpirt {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
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

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

std::string box_plot_svg(const PosteriorSummary& summary, const std::vector<std::string>& names) {
  std::vector<const ParameterSummary*> rows;
  const std::set<std::string> wanted(names.begin(), names.end());
  for (const auto& p : summary.parameters)
    if (wanted.empty() || wanted.count(p.name)) rows.push_back(&p);

  const double row_h = 18.0, left = 180.0, plot_w = 560.0, top = 30.0;
  const double height = top + row_h * static_cast<double>(std::max<std::size_t>(rows.size(), 1)) + 40.0;
  double lo = 0.0, hi = 0.0;
  if (!rows.empty()) {
    lo = rows.front()->min;
    hi = rows.front()->max;
    for (const auto* p : rows) {
      lo = std::min(lo, p->min);
      hi = std::max(hi, p->max);
    }
  }
  if (!(hi > lo)) {
    lo -= 1.0;
    hi += 1.0;
  }
  auto sx = [&](double v) { return left + (v - lo) / (hi - lo) * plot_w; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(left + plot_w + 20) << "\" height=\""
      << num(height) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (lo < 0.0 && hi > 0.0)
    out << "<line x1=\"" << num(sx(0)) << "\" y1=\"" << num(top - 5) << "\" x2=\"" << num(sx(0)) << "\" y2=\""
        << num(height - 35) << "\" stroke=\"#bbb\" stroke-dasharray=\"3,3\"/>\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& p = *rows[r];
    const double y = top + row_h * static_cast<double>(r) + row_h / 2;
    out << "<text x=\"" << num(left - 6) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">" << escape(p.name)
        << "</text>\n";
    out << "<line x1=\"" << num(sx(p.min)) << "\" y1=\"" << num(y) << "\" x2=\"" << num(sx(p.max)) << "\" y2=\""
        << num(y) << "\" stroke=\"black\"/>\n";
    out << "<rect x=\"" << num(sx(p.quantiles[1])) << "\" y=\"" << num(y - 6) << "\" width=\""
        << num(std::max(sx(p.quantiles[3]) - sx(p.quantiles[1]), 0.5)) << "\" height=\"12\" fill=\"#9ecae1\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << num(sx(p.quantiles[2])) << "\" y1=\"" << num(y - 6) << "\" x2=\"" << num(sx(p.quantiles[2]))
        << "\" y2=\"" << num(y + 6) << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
  }
  const double axis_y = height - 30;
  out << "<line x1=\"" << num(left) << "\" y1=\"" << num(axis_y) << "\" x2=\"" << num(left + plot_w) << "\" y2=\""
      << num(axis_y) << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = lo + (hi - lo) * t / 4.0;
    out << "<text x=\"" << num(sx(v)) << "\" y=\"" << num(axis_y + 14) << "\" text-anchor=\"middle\">" << tick(v)
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string trace_plot_svg(const std::string& parameter, std::span<const double> values, std::size_t max_points) {
  const double width = 720.0, height = 240.0, left = 60.0, right = 15.0, top = 25.0, bottom = 30.0;
  const std::size_t n = values.size();
  const std::size_t step = n > max_points && max_points > 0 ? (n + max_points - 1) / max_points : 1;
  double lo = 0.0, hi = 1.0;
  if (n > 0) {
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    lo = *mn;
    hi = *mx;
  }
  if (!(hi > lo)) {
    lo -= 1.0;
    hi += 1.0;
  }
  auto sx = [&](double i) { return left + i / std::max<double>(static_cast<double>(n) - 1.0, 1.0) * (width - left - right); };
  auto sy = [&](double v) { return top + (hi - v) / (hi - lo) * (height - top - bottom); };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << num(left) << "\" y=\"15\">" << escape(parameter) << "</text>\n";
  out << "<polyline fill=\"none\" stroke=\"#3182bd\" stroke-width=\"0.6\" points=\"";
  for (std::size_t i = 0; i < n; i += step) out << num(sx(static_cast<double>(i))) << ',' << num(sy(values[i])) << ' ';
  out << "\"/>\n";
  out << "<text x=\"" << num(left - 4) << "\" y=\"" << num(sy(hi) + 4) << "\" text-anchor=\"end\">" << tick(hi) << "</text>\n";
  out << "<text x=\"" << num(left - 4) << "\" y=\"" << num(sy(lo)) << "\" text-anchor=\"end\">" << tick(lo) << "</text>\n";
  out << "<text x=\"" << num(width - right) << "\" y=\"" << num(height - 8) << "\" text-anchor=\"end\">draw "
      << (n ? n - 1 : 0) << "</text>\n";
  out << "</svg>\n";
  return out.str();
}

}  // namespace bnpirt
