#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace pmdtk {

/// Minimal self-contained SVG line chart; enough to eyeball the CSV outputs
/// without external tooling.
struct SvgSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

void write_svg_chart(const std::filesystem::path& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<SvgSeries>& series, bool log_y = false);

} // namespace pmdtk
