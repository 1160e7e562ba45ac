#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ckit/analysis.hpp"

namespace ckit {

// Static SVG charts for reports. Output is deterministic for equal input.

// Stacked stage shares per segment.
void write_composition_svg(const CompositionTimeline& timeline, const std::string& title,
                           const std::filesystem::path& path);

// Square table of pairwise values, cells shaded by magnitude.
void write_heat_table_svg(const std::vector<std::string>& labels, const Matrix<double>& values,
                          const std::string& title, const std::filesystem::path& path);

struct LineSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

void write_line_chart_svg(const std::vector<LineSeries>& series, const std::string& title,
                          const std::filesystem::path& path);

}  // namespace ckit
