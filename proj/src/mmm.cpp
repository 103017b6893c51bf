#include "pmdtk/mmm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "pmdtk/io.hpp"
#include "pmdtk/spectral.hpp"

namespace pmdtk {

namespace {

constexpr double kPerpTol = 1e-6;
const std::string kScanHeader = "wavelength_nm,state_label,s1,s2,s3";

std::string trimmed(std::string s) {
    const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && is_space(s.back())) {
        s.pop_back();
    }
    std::size_t i = 0;
    while (i < s.size() && is_space(s[i])) {
        ++i;
    }
    return s.substr(i);
}

double parse_field_double(const std::string& field, std::size_t line_no, const char* what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(field, &pos);
        if (pos != field.size()) {
            throw std::invalid_argument(field);
        }
        return v;
    } catch (const std::exception&) {
        throw ValidationError("scan line " + std::to_string(line_no) + ": bad " + what + " '" +
                              field + "'");
    }
}

} // namespace

ScanSet::ScanSet(std::vector<double> wavelengths_nm,
                 std::map<std::string, std::vector<Stokes>> outputs_by_label,
                 std::map<std::string, Stokes> declared_inputs)
    : wavelengths_(std::move(wavelengths_nm)),
      outputs_(std::move(outputs_by_label)),
      declared_inputs_(std::move(declared_inputs)) {
    if (wavelengths_.empty()) {
        throw ValidationError("scan contains no wavelengths");
    }
    for (std::size_t i = 1; i < wavelengths_.size(); ++i) {
        if (wavelengths_[i] <= wavelengths_[i - 1]) {
            throw ValidationError("scan wavelengths must be strictly increasing");
        }
    }
    if (outputs_.size() < 2) {
        throw ValidationError("scan needs at least two launched states");
    }
    for (auto& [label, outputs] : outputs_) {
        if (outputs.size() != wavelengths_.size()) {
            throw ValidationError("state '" + label + "' is missing at some wavelengths");
        }
        auto it = declared_inputs_.find(label);
        if (it == declared_inputs_.end()) {
            throw ValidationError("no declared input Stokes vector for state '" + label + "'");
        }
        require_unit(it->second, 1e-6, "declared input for '" + label + "'");
        it->second.normalize();
        for (Stokes& s : outputs) {
            require_unit(s, 0.05, "scan output");
            s.normalize();
        }
    }
    if (perpendicular_pairs().empty()) {
        throw ValidationError("declared inputs contain no Stokes-perpendicular pair");
    }
}

const Stokes& ScanSet::output(const std::string& label, std::size_t wavelength_index) const {
    auto it = outputs_.find(label);
    if (it == outputs_.end()) {
        throw ValidationError("scan has no state '" + label + "'");
    }
    if (wavelength_index >= wavelengths_.size()) {
        throw ValidationError("wavelength index out of range");
    }
    return it->second[wavelength_index];
}

std::vector<std::pair<std::string, std::string>> ScanSet::perpendicular_pairs() const {
    std::vector<std::pair<std::string, std::string>> pairs;
    for (auto a = declared_inputs_.begin(); a != declared_inputs_.end(); ++a) {
        for (auto b = std::next(a); b != declared_inputs_.end(); ++b) {
            if (std::abs(a->second.dot(b->second)) < kPerpTol) {
                pairs.emplace_back(a->first, b->first);
            }
        }
    }
    return pairs;
}

ScanSet parse_scan(std::istream& source, std::map<std::string, Stokes> declared_inputs) {
    std::string line;
    if (!std::getline(source, line)) {
        throw ValidationError("scan is empty");
    }
    if (trimmed(line) != kScanHeader) {
        throw ValidationError("scan header must be '" + kScanHeader + "'");
    }

    struct Row {
        std::string label;
        Stokes s;
        std::size_t line_no;
    };
    std::map<double, std::vector<Row>> by_wavelength;
    std::size_t line_no = 1;
    while (std::getline(source, line)) {
        ++line_no;
        const std::string t = trimmed(line);
        if (t.empty()) {
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(t);
        std::string field;
        while (std::getline(ss, field, ',')) {
            fields.push_back(trimmed(field));
        }
        if (fields.size() != 5) {
            throw ValidationError("scan line " + std::to_string(line_no) +
                                  ": expected 5 comma-separated fields, got " +
                                  std::to_string(fields.size()));
        }
        const double lam = parse_field_double(fields[0], line_no, "wavelength");
        Row row;
        row.label = fields[1];
        if (row.label.empty()) {
            throw ValidationError("scan line " + std::to_string(line_no) + ": empty state label");
        }
        row.s = Stokes(parse_field_double(fields[2], line_no, "s1"),
                       parse_field_double(fields[3], line_no, "s2"),
                       parse_field_double(fields[4], line_no, "s3"));
        const double norm = row.s.norm();
        if (norm < 0.95 || norm > 1.05) {
            throw ValidationError("scan line " + std::to_string(line_no) + ": Stokes norm " +
                                  format_double(norm) + " outside [0.95, 1.05]");
        }
        row.line_no = line_no;
        by_wavelength[lam].push_back(row);
    }
    if (by_wavelength.empty()) {
        throw ValidationError("scan contains no data rows");
    }

    // All wavelengths must carry the same label set.
    std::vector<std::string> labels;
    for (const Row& row : by_wavelength.begin()->second) {
        labels.push_back(row.label);
    }
    std::sort(labels.begin(), labels.end());

    std::vector<double> wavelengths;
    std::map<std::string, std::vector<Stokes>> outputs;
    for (auto& [lam, rows] : by_wavelength) {
        std::vector<std::string> here;
        for (const Row& row : rows) {
            here.push_back(row.label);
        }
        std::sort(here.begin(), here.end());
        if (std::adjacent_find(here.begin(), here.end()) != here.end()) {
            throw ValidationError("scan wavelength " + format_double(lam) +
                                  " nm carries a duplicate state row (near line " +
                                  std::to_string(rows.front().line_no) + ")");
        }
        if (here != labels) {
            throw ValidationError("scan wavelength " + format_double(lam) +
                                  " nm (near line " + std::to_string(rows.front().line_no) +
                                  ") does not carry the same state set as the rest of the scan");
        }
        wavelengths.push_back(lam);
        for (const Row& row : rows) {
            outputs[row.label].push_back(row.s);
        }
    }

    // Canonical labels default to their canonical Stokes vectors.
    for (const std::string& label : labels) {
        if (!declared_inputs.count(label) && is_state_label(label)) {
            declared_inputs[label] = state_from_label(label);
        }
    }
    return ScanSet(std::move(wavelengths), std::move(outputs), std::move(declared_inputs));
}

ScanSet parse_scan_file(const std::filesystem::path& path,
                        std::map<std::string, Stokes> declared_inputs) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open scan file " + path.string());
    }
    return parse_scan(in, std::move(declared_inputs));
}

PolRotation output_frame(const ScanSet& scan, std::size_t wavelength_index,
                         const std::pair<std::string, std::string>& pair) {
    const auto& inputs = scan.declared_inputs();
    auto ia = inputs.find(pair.first);
    auto ib = inputs.find(pair.second);
    if (ia == inputs.end() || ib == inputs.end()) {
        throw ValidationError("unknown launched-state pair (" + pair.first + ", " + pair.second +
                              ")");
    }
    if (std::abs(ia->second.dot(ib->second)) >= kPerpTol) {
        throw ValidationError("launched pair (" + pair.first + ", " + pair.second +
                              ") is not Stokes-perpendicular");
    }
    const Stokes& a_out = scan.output(pair.first, wavelength_index);
    const Stokes& b_out = scan.output(pair.second, wavelength_index);
    const double cos_lim = std::cos(5.0 * std::numbers::pi / 180.0);
    if (std::abs(a_out.dot(b_out)) > cos_lim) {
        throw ValidationError("degenerate frame: outputs of (" + pair.first + ", " + pair.second +
                              ") are within 5 degrees of collinear");
    }

    const Stokes o1 = a_out.normalized();
    const Stokes o2 = (b_out - o1 * o1.dot(b_out)).normalized();
    const Stokes i1 = ia->second.normalized();
    const Stokes i2 = (ib->second - i1 * i1.dot(ib->second)).normalized();

    Eigen::Matrix3d out_frame;
    out_frame.col(0) = o1;
    out_frame.col(1) = o2;
    out_frame.col(2) = o1.cross(o2);
    Eigen::Matrix3d in_frame;
    in_frame.col(0) = i1;
    in_frame.col(1) = i2;
    in_frame.col(2) = i1.cross(i2);
    return PolRotation(out_frame * in_frame.transpose());
}

DGDRecord dgd_from_rotations(const PolRotation& r_a, double lambda_a_nm, const PolRotation& r_b,
                             double lambda_b_nm) {
    if (lambda_a_nm == lambda_b_nm) {
        throw ValidationError("DGD extraction needs two distinct wavelengths");
    }
    // Order by optical frequency: the step rotation is measured from low to
    // high frequency, which fixes the PSP sign.
    const PolRotation& r_lo = lambda_a_nm > lambda_b_nm ? r_a : r_b;
    const PolRotation& r_hi = lambda_a_nm > lambda_b_nm ? r_b : r_a;
    const PolRotation r_step = r_hi * r_lo.transposed();
    const AngleAxis aa = rotation_angle_axis(r_step);
    if (aa.angle_rad > std::numbers::pi - 1e-3) {
        throw ValidationError("wavelength step too coarse: rotation angle approaches pi");
    }
    const double dw =
        std::abs(omega_rad_per_ps(lambda_a_nm) - omega_rad_per_ps(lambda_b_nm));
    DGDRecord rec;
    rec.wavelength_nm = 0.5 * (lambda_a_nm + lambda_b_nm);
    rec.dgd_ps = aa.angle_rad / dw;
    rec.psp = aa.axis;
    rec.psp_defined = aa.axis_defined;
    return rec;
}

std::optional<double> extremum_half_period(std::span<const double> wavelengths_nm,
                                           std::span<const double> values) {
    if (wavelengths_nm.size() != values.size()) {
        throw ValidationError("extremum estimator needs matching series lengths");
    }
    double scale = 0.0;
    for (double v : values) {
        scale = std::max(scale, std::abs(v));
    }
    // Prominence floor: rounding-level jitter on a flat series must not
    // register as oscillation.
    const double tol = 1e-9 * scale;
    std::vector<double> extrema;
    for (std::size_t i = 1; i + 1 < values.size(); ++i) {
        const bool peak = values[i] > values[i - 1] + tol && values[i] > values[i + 1] + tol;
        const bool dip = values[i] < values[i - 1] - tol && values[i] < values[i + 1] - tol;
        if (peak || dip) {
            extrema.push_back(wavelengths_nm[i]);
        }
    }
    if (extrema.size() < 3) {
        return std::nullopt;
    }
    return (extrema.back() - extrema.front()) / static_cast<double>(extrema.size() - 1);
}

DGDReport dgd_report(const ScanSet& scan, const std::pair<std::string, std::string>& pair) {
    if (scan.n_wavelengths() < 10) {
        throw ValidationError("DGD report needs at least 10 wavelengths");
    }
    std::vector<PolRotation> frames;
    frames.reserve(scan.n_wavelengths());
    for (std::size_t i = 0; i < scan.n_wavelengths(); ++i) {
        frames.push_back(output_frame(scan, i, pair));
    }
    DGDReport report;
    const auto lams = scan.wavelengths();
    for (std::size_t i = 0; i + 1 < frames.size(); ++i) {
        report.records.push_back(
            dgd_from_rotations(frames[i], lams[i], frames[i + 1], lams[i + 1]));
    }

    double mean = 0.0;
    for (const DGDRecord& r : report.records) {
        mean += r.dgd_ps;
    }
    mean /= static_cast<double>(report.records.size());
    double var = 0.0;
    for (const DGDRecord& r : report.records) {
        var += (r.dgd_ps - mean) * (r.dgd_ps - mean);
    }
    report.summary.mean_dgd_ps = mean;
    report.summary.std_dgd_ps =
        report.records.size() > 1
            ? std::sqrt(var / static_cast<double>(report.records.size() - 1))
            : 0.0;

    std::vector<double> mids, dgds;
    for (const DGDRecord& r : report.records) {
        mids.push_back(r.wavelength_nm);
        dgds.push_back(r.dgd_ps);
    }
    report.summary.delta_lambda0_nm = extremum_half_period(mids, dgds);
    return report;
}

DGDReport dgd_report(const ScanSet& scan) {
    return dgd_report(scan, scan.perpendicular_pairs().front());
}

} // namespace pmdtk
