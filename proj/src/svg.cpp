#include "pmdtk/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pmdtk/errors.hpp"
#include "pmdtk/io.hpp"

namespace pmdtk {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 440.0;
constexpr double kMargin = 60.0;

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        default: out += c;
        }
    }
    return out;
}

} // namespace

void write_svg_chart(const std::filesystem::path& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<SvgSeries>& series, bool log_y) {
    double x_min = std::numeric_limits<double>::infinity();
    double x_max = -x_min;
    double y_min = x_min;
    double y_max = -x_min;
    const auto y_value = [log_y](double y) {
        return log_y ? std::log10(std::max(y, 1e-300)) : y;
    };
    for (const SvgSeries& s : series) {
        if (s.x.size() != s.y.size()) {
            throw ValidationError("SVG series '" + s.label + "' has mismatched lengths");
        }
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            x_min = std::min(x_min, s.x[i]);
            x_max = std::max(x_max, s.x[i]);
            y_min = std::min(y_min, y_value(s.y[i]));
            y_max = std::max(y_max, y_value(s.y[i]));
        }
    }
    if (!(x_max > x_min)) {
        x_max = x_min + 1.0;
    }
    if (!(y_max > y_min)) {
        y_max = y_min + 1.0;
    }

    const auto sx = [&](double x) {
        return kMargin + (x - x_min) / (x_max - x_min) * (kWidth - 2 * kMargin);
    };
    const auto sy = [&](double y) {
        return kHeight - kMargin - (y_value(y) - y_min) / (y_max - y_min) * (kHeight - 2 * kMargin);
    };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
        << xml_escape(title) << "</text>\n";
    // Axes box.
    out << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kWidth - 2 * kMargin
        << "\" height=\"" << kHeight - 2 * kMargin
        << "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 16
        << "\" text-anchor=\"middle\" font-size=\"12\">" << xml_escape(x_label) << "</text>\n";
    out << "<text x=\"18\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\" font-size=\"12\" "
        << "transform=\"rotate(-90 18 " << kHeight / 2 << ")\">"
        << xml_escape(log_y ? "log10(" + y_label + ")" : y_label) << "</text>\n";
    // Range labels.
    out << "<text x=\"" << kMargin << "\" y=\"" << kHeight - kMargin + 16
        << "\" font-size=\"10\">" << format_double(x_min) << "</text>\n";
    out << "<text x=\"" << kWidth - kMargin << "\" y=\"" << kHeight - kMargin + 16
        << "\" text-anchor=\"end\" font-size=\"10\">" << format_double(x_max) << "</text>\n";
    out << "<text x=\"" << kMargin - 4 << "\" y=\"" << kHeight - kMargin
        << "\" text-anchor=\"end\" font-size=\"10\">" << format_double(y_min) << "</text>\n";
    out << "<text x=\"" << kMargin - 4 << "\" y=\"" << kMargin + 4
        << "\" text-anchor=\"end\" font-size=\"10\">" << format_double(y_max) << "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const SvgSeries& s = series[si];
        if (s.x.empty()) {
            continue;
        }
        const char* color = kColors[si % (sizeof(kColors) / sizeof(kColors[0]))];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            out << format_double(sx(s.x[i])) << "," << format_double(sy(s.y[i]));
            if (i + 1 < s.x.size()) {
                out << " ";
            }
        }
        out << "\"/>\n";
        out << "<text x=\"" << kWidth - kMargin - 8 << "\" y=\"" << kMargin + 16 + 14 * si
            << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << color << "\">"
            << xml_escape(s.label) << "</text>\n";
    }
    out << "</svg>\n";
    atomic_write_text(path, out.str());
}

} // namespace pmdtk
