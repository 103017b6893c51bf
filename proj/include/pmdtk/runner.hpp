#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pmdtk/fiber.hpp"
#include "pmdtk/infidelity.hpp"

namespace pmdtk {

/// Output sink shared by all subcommands.
struct OutputOptions {
    std::filesystem::path out_dir = "out";
    bool svg = false;
};

struct GridOptions {
    double start_nm = 1260.0;
    double stop_nm = 1360.0;
    double step_nm = 0.25;

    SpectralGrid make() const;
};

/// Either synthesize from spec fields or load a fiber JSON.
struct FiberOptions {
    double length_km = 30.0;
    double pmd_coeff = 0.05;
    int segments = 200;
    std::uint64_t seed = 42;
    std::optional<std::filesystem::path> fiber_in;

    FiberRealization realize() const;
};

struct SimulateOptions {
    FiberOptions fiber;
    GridOptions grid;
    std::vector<std::string> states = {"H", "D"};
    OutputOptions output;
};

/// Writes fiber.json, trajectory_<state>.csv per launched state
/// (wavelength_nm,s1,s2,s3), scan.csv (MMM-ready combined scan) and dgd.csv.
void run_simulate(const SimulateOptions& opts);

struct InfidelityOptions {
    FiberOptions fiber;
    GridOptions grid;
    double window_nm = 5.0;
    OutputOptions output;
};

/// Writes infidelity.csv:
/// wavelength_nm,p_e_H,p_e_V,p_e_D,p_e_A,p_e_dgd_bound.
void run_infidelity(const InfidelityOptions& opts);

struct SweepOptions {
    double pmd_coeff = 0.05;
    std::vector<double> lengths_km = {10, 25, 50, 75, 100, 125, 150, 175, 200};
    std::vector<double> widths_nm = {0.25, 0.5, 1.0, 2.0};
    int realizations = 400;
    int segments = 200;
    double center_nm = 1310.0;
    int band_samples = 33;
    /// "equatorial" (default; the DGD-method geometry, sin(phi)=1) or
    /// "uniform" (states uniform over the sphere).
    std::string states = "equatorial";
    std::uint64_t seed = 42;
    OutputOptions output;
};

/// Writes sweep.csv:
/// distance_km,bandwidth_nm,p_e_mean,p_e_std,p_e_dgd_method.
void run_sweep(const SweepOptions& opts);

struct MmmOptions {
    std::filesystem::path scan_path;
    /// Optional declared-inputs file: lines `label,s1,s2,s3`; canonical
    /// labels H/V/D/A/R/L need no declaration.
    std::optional<std::filesystem::path> inputs_path;
    OutputOptions output;
};

/// Writes dgd.csv (wavelength_nm,dgd_ps,psp_s1,psp_s2,psp_s3) and
/// summary.json (mean, std, delta_lambda0, two-pair reproducibility when the
/// scan contains a second perpendicular pair).
void run_mmm(const MmmOptions& opts);

struct QberModelOptions {
    double pmd_coeff = 0.0474;
    double width_nm = 2.0;
    double center_nm = 1310.0;
    std::vector<double> lengths_km = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
    double baseline = 0.0;
    std::optional<std::filesystem::path> measured_path;
    OutputOptions output;
};

/// Writes qber_model.csv (distance_km,p_e_model) and summary.json; when a
/// measured series (distance_km,qber[,sigma]) is supplied, the summary also
/// carries the linear-regression slope, intercept and correlation R of the
/// measured data.
void run_qber_model(const QberModelOptions& opts);

struct BasisStudyOptions {
    /// Arc angle; when a fiber is supplied it is derived from the band DGD
    /// instead and this value is ignored.
    double delta_theta = 1.0;
    std::vector<double> omega_axis = {1.0, 0.0, 0.0};
    double p_z = 0.5;
    /// "min_weighted" or "balance".
    std::string objective = "balance";
    double ratio = 1.0;
    std::optional<std::filesystem::path> fiber_in;
    GridOptions grid;
    double center_nm = 1310.0;
    double width_nm = 20.0;
    OutputOptions output;
};

/// Writes basis_study.json: error budgets for the three canonical
/// geometries, the six-state average, the orientation-optimizer result, and
/// (when a fiber is supplied) the higher-order report.
void run_basis_study(const BasisStudyOptions& opts);

} // namespace pmdtk
