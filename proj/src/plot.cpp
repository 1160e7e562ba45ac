#include "ckit/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ckit/error.hpp"

namespace ckit {

namespace {

constexpr std::array<const char*, kStageCount> kStageColors{"#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1"};
constexpr std::array<const char*, 8> kLineColors{"#4e79a7", "#f28e2b", "#e15759", "#76b7b2",
                                                 "#59a14f", "#edc948", "#b07aa1", "#9c755f"};

std::string escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(2);
  s << v;
  return s.str();
}

void save(const std::filesystem::path& path, const std::string& body, int width, int height) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << body << "</svg>\n";
  if (!out.flush()) throw Error("write failed: " + path.string());
}

}  // namespace

void write_composition_svg(const CompositionTimeline& timeline, const std::string& title,
                           const std::filesystem::path& path) {
  constexpr int width = 800, height = 360, left = 50, top = 40, plot_w = 620, plot_h = 280;
  std::ostringstream body;
  body << "<text x=\"" << left << "\" y=\"24\" font-size=\"14\">" << escape(title) << "</text>\n";
  const std::size_t n = timeline.segments();
  const double bar_w = static_cast<double>(plot_w) / static_cast<double>(std::max<std::size_t>(n, 1));
  for (std::size_t s = 0; s < n; ++s) {
    double y = top + plot_h;
    for (std::size_t k = 0; k < kStageCount; ++k) {
      const double h = timeline.shares(s, k) * plot_h;
      if (h <= 0.0) continue;
      y -= h;
      body << "<rect x=\"" << num(left + s * bar_w) << "\" y=\"" << num(y) << "\" width=\"" << num(bar_w)
           << "\" height=\"" << num(h) << "\" fill=\"" << kStageColors[k] << "\"/>\n";
    }
  }
  body << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << plot_w << "\" height=\"" << plot_h
       << "\" fill=\"none\" stroke=\"black\"/>\n";
  body << "<text x=\"" << left << "\" y=\"" << top + plot_h + 20 << "\">training progress (segments)</text>\n";
  for (std::size_t k = 0; k < kStageCount; ++k) {
    const int y = top + 10 + static_cast<int>(k) * 20;
    body << "<rect x=\"" << left + plot_w + 20 << "\" y=\"" << y << "\" width=\"12\" height=\"12\" fill=\""
         << kStageColors[k] << "\"/><text x=\"" << left + plot_w + 38 << "\" y=\"" << y + 11 << "\">"
         << to_string(kAllStages[k]) << "</text>\n";
  }
  save(path, body.str(), width, height);
}

void write_heat_table_svg(const std::vector<std::string>& labels, const Matrix<double>& values,
                          const std::string& title, const std::filesystem::path& path) {
  if (values.rows() != labels.size() || values.cols() != labels.size()) throw Error("heat table shape mismatch");
  constexpr int cell = 56, left = 130, top = 130;
  const int n = static_cast<int>(labels.size());
  double hi = 0.0;
  for (const double v : values.data()) hi = std::max(hi, std::abs(v));
  std::ostringstream body;
  body << "<text x=\"10\" y=\"24\" font-size=\"14\">" << escape(title) << "</text>\n";
  for (int i = 0; i < n; ++i) {
    body << "<text x=\"" << left - 6 << "\" y=\"" << top + i * cell + cell / 2 + 4 << "\" text-anchor=\"end\">"
         << escape(labels[i]) << "</text>\n";
    body << "<text transform=\"translate(" << left + i * cell + cell / 2 + 4 << ',' << top - 6
         << ") rotate(-60)\">" << escape(labels[i]) << "</text>\n";
    for (int j = 0; j < n; ++j) {
      const double v = values(i, j);
      const double t = hi > 0.0 ? std::abs(v) / hi : 0.0;
      const int shade = static_cast<int>(std::lround(255.0 * (1.0 - t)));
      body << "<rect x=\"" << left + j * cell << "\" y=\"" << top + i * cell << "\" width=\"" << cell
           << "\" height=\"" << cell << "\" fill=\"rgb(255," << shade << ',' << shade << ")\" stroke=\"#ccc\"/>"
           << "<text x=\"" << left + j * cell + cell / 2 << "\" y=\"" << top + i * cell + cell / 2 + 4
           << "\" text-anchor=\"middle\" font-size=\"10\">" << num(v) << "</text>\n";
    }
  }
  save(path, body.str(), left + n * cell + 20, top + n * cell + 20);
}

void write_line_chart_svg(const std::vector<LineSeries>& series, const std::string& title,
                          const std::filesystem::path& path) {
  constexpr int width = 800, height = 360, left = 60, top = 40, plot_w = 560, plot_h = 280;
  double x_lo = INFINITY, x_hi = -INFINITY, y_lo = INFINITY, y_hi = -INFINITY;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw Error("line series '" + s.name + "' has mismatched x/y");
    for (const double v : s.x) x_lo = std::min(x_lo, v), x_hi = std::max(x_hi, v);
    for (const double v : s.y) y_lo = std::min(y_lo, v), y_hi = std::max(y_hi, v);
  }
  if (!(x_hi >= x_lo)) x_lo = 0, x_hi = 1;
  if (!(y_hi >= y_lo)) y_lo = 0, y_hi = 1;
  if (x_hi == x_lo) x_hi = x_lo + 1;
  if (y_hi == y_lo) y_hi = y_lo + 1;
  const auto px = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * plot_w; };
  const auto py = [&](double y) { return top + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h; };

  std::ostringstream body;
  body << "<text x=\"" << left << "\" y=\"24\" font-size=\"14\">" << escape(title) << "</text>\n";
  body << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << plot_w << "\" height=\"" << plot_h
       << "\" fill=\"none\" stroke=\"black\"/>\n";
  body << "<text x=\"" << left - 4 << "\" y=\"" << top + 4 << "\" text-anchor=\"end\">" << num(y_hi) << "</text>\n"
       << "<text x=\"" << left - 4 << "\" y=\"" << top + plot_h << "\" text-anchor=\"end\">" << num(y_lo) << "</text>\n"
       << "<text x=\"" << left << "\" y=\"" << top + plot_h + 16 << "\">" << num(x_lo) << "</text>\n"
       << "<text x=\"" << left + plot_w << "\" y=\"" << top + plot_h + 16 << "\" text-anchor=\"end\">" << num(x_hi)
       << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kLineColors[k % kLineColors.size()];
    body << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) body << (i ? " " : "") << num(px(s.x[i])) << ',' << num(py(s.y[i]));
    body << "\"/>\n";
    const int y = top + 10 + static_cast<int>(k) * 18;
    body << "<rect x=\"" << left + plot_w + 16 << "\" y=\"" << y << "\" width=\"12\" height=\"3\" fill=\"" << color
         << "\"/><text x=\"" << left + plot_w + 34 << "\" y=\"" << y + 5 << "\">" << escape(s.name) << "</text>\n";
  }
  save(path, body.str(), width, height);
}

}  // namespace ckit
