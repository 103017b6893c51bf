#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pmdtk/polarization.hpp"

namespace pmdtk {

/// One polarimeter reading: output Stokes vector for a launched state at a
/// wavelength. Stored renormalized; the raw norm must be within +-5%.
struct ScanRecord {
    double wavelength_nm;
    std::string state_label;
    Stokes stokes;
};

/// A full frequency scan of >= 2 launched states, grouped by wavelength,
/// plus the declared input Stokes vector per state label.
class ScanSet {
public:
    ScanSet(std::vector<double> wavelengths_nm,
            std::map<std::string, std::vector<Stokes>> outputs_by_label,
            std::map<std::string, Stokes> declared_inputs);

    std::span<const double> wavelengths() const { return wavelengths_; }
    std::size_t n_wavelengths() const { return wavelengths_.size(); }
    const std::map<std::string, Stokes>& declared_inputs() const { return declared_inputs_; }
    const Stokes& output(const std::string& label, std::size_t wavelength_index) const;

    /// Label pairs whose declared inputs are Stokes-perpendicular — the pairs
    /// usable for frame reconstruction, in deterministic (sorted) order.
    std::vector<std::pair<std::string, std::string>> perpendicular_pairs() const;

private:
    std::vector<double> wavelengths_;
    std::map<std::string, std::vector<Stokes>> outputs_;
    std::map<std::string, Stokes> declared_inputs_;
};

/// Parse `wavelength_nm,state_label,s1,s2,s3` CSV (header required).
/// `declared_inputs` maps each state label to its launched Stokes vector;
/// labels H/V/D/A/R/L may be omitted and default to their canonical vectors.
/// Malformed rows, norms outside [0.95, 1.05], missing states at a wavelength
/// and input sets without any perpendicular pair are ValidationErrors naming
/// the CSV line where applicable.
ScanSet parse_scan(std::istream& source, std::map<std::string, Stokes> declared_inputs = {});
ScanSet parse_scan_file(const std::filesystem::path& path,
                        std::map<std::string, Stokes> declared_inputs = {});

/// Channel rotation at one wavelength, reconstructed from the outputs of one
/// perpendicular launched pair by Gram-Schmidt: maps the declared input frame
/// onto the measured output frame. Orthonormal by construction even on noisy
/// data. Throws when the two outputs are within 5 degrees of collinear.
PolRotation output_frame(const ScanSet& scan, std::size_t wavelength_index,
                         const std::pair<std::string, std::string>& pair);

/// PMD sample from channel rotations at two wavelengths.
struct DGDRecord {
    double wavelength_nm; // interval midpoint
    double dgd_ps;        // >= 0
    Stokes psp;           // unit; (1,0,0) by convention when undefined
    bool psp_defined;     // false when the rotation step is ~identity
};

/// Mueller Matrix Method step: R_delta = R_b R_a^T, DGD = angle / |d omega|,
/// PSP from the antisymmetric part of R_delta (sign fixed so the rotation
/// angle is in (0, pi), measured from low to high optical frequency).
/// Throws when the step angle is within 1e-3 of pi (grid too coarse).
DGDRecord dgd_from_rotations(const PolRotation& r_a, double lambda_a_nm,
                             const PolRotation& r_b, double lambda_b_nm);

struct DGDSummary {
    double mean_dgd_ps;
    double std_dgd_ps;
    /// Mean wavelength distance between successive local extrema of the DGD
    /// series — half the oscillation period. Unavailable with < 3 extrema.
    std::optional<double> delta_lambda0_nm;
};

struct DGDReport {
    std::vector<DGDRecord> records;
    DGDSummary summary;
};

/// Full MMM pipeline over one launched pair (default: the first
/// perpendicular pair): per-interval DGD records plus summary statistics.
/// Requires >= 10 wavelengths.
DGDReport dgd_report(const ScanSet& scan);
DGDReport dgd_report(const ScanSet& scan, const std::pair<std::string, std::string>& pair);

/// The extremum-spacing estimator underlying DGDSummary::delta_lambda0_nm,
/// reusable on any uniformly sampled series. Extrema must rise above a
/// 1e-9-relative prominence floor, so a flat series (rounding jitter only)
/// reports nullopt.
std::optional<double> extremum_half_period(std::span<const double> wavelengths_nm,
                                           std::span<const double> values);

} // namespace pmdtk
