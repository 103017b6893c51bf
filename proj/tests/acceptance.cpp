// Acceptance suite: one self-contained check per release criterion, each
// printing a single PASS/FAIL line with the measured figures. The process
// exit code is the number of failed criteria.
#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pmdtk/fiber.hpp"
#include "pmdtk/infidelity.hpp"
#include "pmdtk/io.hpp"
#include "pmdtk/mmm.hpp"
#include "pmdtk/polarization.hpp"
#include "pmdtk/protocol.hpp"
#include "pmdtk/rng.hpp"
#include "pmdtk/spectral.hpp"

using namespace pmdtk;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Result {
    bool pass;
    std::string detail;
};

std::string fmt(double v) { return format_double(v); }

double mean_of(const std::vector<double>& xs) {
    double m = 0.0;
    for (double x : xs) {
        m += x;
    }
    return m / static_cast<double>(xs.size());
}

double median_of(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

struct Fit {
    double slope;
    double intercept;
    double r2;
};

Fit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        syy += y[i] * y[i];
    }
    const double cov = sxy - sx * sy / n;
    const double vx = sxx - sx * sx / n;
    const double vy = syy - sy * sy / n;
    Fit f;
    f.slope = cov / vx;
    f.intercept = (sy - f.slope * sx) / n;
    f.r2 = cov * cov / (vx * vy);
    return f;
}

/// Uniform-theta arc trajectory: s0 at angle phi from the rotation axis,
/// swept symmetrically through delta_theta. Wavelengths are a dummy uniform
/// grid (the integrator only needs uniform spacing).
Trajectory synthetic_arc(double delta_theta, double phi, int n_samples) {
    Trajectory traj;
    const Stokes axis(0, 0, 1);
    const Stokes s0(std::sin(phi), 0.0, std::cos(phi));
    for (int i = 0; i < n_samples; ++i) {
        const double frac = n_samples == 1 ? 0.5 : static_cast<double>(i) / (n_samples - 1);
        const double theta = (frac - 0.5) * delta_theta;
        traj.wavelengths_nm.push_back(1300.0 + 10.0 * frac);
        traj.states.push_back(rotate_stokes(s0, axis, theta));
    }
    return traj;
}

/// Polarimeter-style scan CSV for a fiber: exact output Stokes rows for the
/// given launched states at every grid wavelength.
std::string scan_csv_for(const FiberRealization& fiber, const SpectralGrid& grid,
                         const std::vector<std::string>& labels) {
    std::ostringstream os;
    os << "wavelength_nm,state_label,s1,s2,s3\n";
    os.precision(17);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (const std::string& label : labels) {
            const Eigen::Matrix2cd u = transfer_unitary(fiber, grid[i]);
            const Eigen::Vector2cd amp =
                u * stokes_to_jones(state_from_label(label)).amplitudes();
            const Stokes s = jones_to_stokes(JonesVector::from_amplitudes(amp(0), amp(1)));
            os << grid[i] << "," << label << "," << s.x() << "," << s.y() << "," << s.z() << "\n";
        }
    }
    return os.str();
}

double dgd_at(const FiberRealization& fiber, double wavelength_nm) {
    const double probe[3] = {wavelength_nm - 0.05, wavelength_nm, wavelength_nm + 0.05};
    return pmd_vector_spectrum(fiber, probe)[0].dgd_ps();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(PMDTK_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "pmdtk_acceptance" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

/// Compare two output directories file by file; nullopt when identical.
std::optional<std::string> compare_dirs(const fs::path& a, const fs::path& b) {
    std::vector<fs::path> names;
    for (const auto& entry : fs::directory_iterator(a)) {
        names.push_back(entry.path().filename());
    }
    std::sort(names.begin(), names.end());
    std::size_t b_count = 0;
    for (const auto& entry : fs::directory_iterator(b)) {
        (void)entry;
        ++b_count;
    }
    if (b_count != names.size()) {
        return "file sets differ";
    }
    for (const fs::path& name : names) {
        if (!fs::exists(b / name)) {
            return name.string() + " missing from re-run";
        }
        if (read_text(a / name) != read_text(b / name)) {
            return name.string() + " differs between runs";
        }
    }
    return std::nullopt;
}

// --- criterion 1 -----------------------------------------------------------

Result criterion_closed_form_anchor() {
    const double anchor = 0.0793, tol = 0.0005;
    const double p = closed_form_infidelity(ArcParams(2.0, kPi / 2));
    return {std::abs(p - anchor) <= tol,
            "p_e(2 rad, phi=pi/2) = " + fmt(p) + " (target " + fmt(anchor) + " +- " + fmt(tol) +
                ")"};
}

// --- criterion 2 -----------------------------------------------------------

Result criterion_arc_law_equivalence() {
    const double integration_tol = 1e-6;   // trajectory vs closed form
    const double small_angle_tol = 0.01;   // quadratic law vs closed form, dtheta <= 0.5
    const double max_spacing_rad = 0.002;  // arc sampling (well under 0.05)

    double worst_integration = 0.0;
    for (int i = 0; i <= 24; ++i) {
        const double delta_theta = kPi * i / 24.0;
        int n = std::max(3, static_cast<int>(std::ceil(delta_theta / max_spacing_rad)) + 1);
        n += (n % 2 == 0) ? 1 : 0; // odd: the central sample is the reference
        for (double phi : {kPi / 2, kPi / 3}) {
            const double traj = trajectory_infidelity(synthetic_arc(delta_theta, phi, n));
            const double closed = closed_form_infidelity(ArcParams(delta_theta, phi));
            worst_integration = std::max(worst_integration, std::abs(traj - closed));
        }
    }

    double worst_small = 0.0;
    for (int i = 1; i <= 10; ++i) {
        const double delta_theta = 0.05 * i;
        const double closed = closed_form_infidelity(ArcParams(delta_theta, kPi / 2));
        const double small = small_angle_infidelity(ArcParams(delta_theta, kPi / 2));
        worst_small = std::max(worst_small, std::abs(small - closed) / closed);
    }

    return {worst_integration <= integration_tol && worst_small <= small_angle_tol,
            "max |integration - closed form| = " + fmt(worst_integration) + " (tol " +
                fmt(integration_tol) + "); max quadratic-law rel err = " + fmt(worst_small) +
                " (tol " + fmt(small_angle_tol) + ")"};
}

// --- criterion 3 -----------------------------------------------------------

Result criterion_mmm_exactness() {
    const double tol = 1e-6;
    const double delay = 0.3;
    const FiberRealization fiber({Segment{Stokes(0.48, 0.6, -0.64).normalized(), delay}});
    const SpectralGrid grid(1300.0, 1320.0, 41);
    std::istringstream in(scan_csv_for(fiber, grid, {"H", "D", "R"}));
    const ScanSet scan = parse_scan(in);
    const auto pairs = scan.perpendicular_pairs();

    const DGDReport first = dgd_report(scan, pairs[0]);
    double worst_recovery = 0.0;
    for (const DGDRecord& rec : first.records) {
        worst_recovery = std::max(worst_recovery, std::abs(rec.dgd_ps - delay) / delay);
    }

    const DGDReport second = dgd_report(scan, pairs[1]);
    double worst_pair_diff = 0.0;
    for (std::size_t i = 0; i < first.records.size(); ++i) {
        worst_pair_diff = std::max(worst_pair_diff,
                                   std::abs(first.records[i].dgd_ps - second.records[i].dgd_ps) /
                                       first.records[i].dgd_ps);
    }

    return {worst_recovery <= tol && worst_pair_diff <= tol,
            "single-waveplate DGD recovered to " + fmt(worst_recovery) +
                " rel; two launched-state pairs differ by " + fmt(worst_pair_diff) + " rel (tol " +
                fmt(tol) + ")"};
}

// --- criterion 4 -----------------------------------------------------------

Result criterion_dgd_statistics() {
    const double mean_tol = 0.03, ratio_tol = 0.03;
    const double slope_lo = 0.48, slope_hi = 0.52;
    const double coeff = 0.05;
    const int n_realizations = 2000;

    std::vector<double> dgds;
    dgds.reserve(n_realizations);
    for (int r = 0; r < n_realizations; ++r) {
        const FiberRealization fiber =
            synthesize_fiber(FiberSpec{100.0, coeff, 200, 90000 + static_cast<std::uint64_t>(r)});
        dgds.push_back(dgd_at(fiber, 1310.0));
    }
    const double mean = mean_of(dgds);
    double msq = 0.0;
    for (double d : dgds) {
        msq += d * d;
    }
    msq /= n_realizations;
    const double expected_mean = coeff * std::sqrt(100.0);
    const double mean_err = std::abs(mean - expected_mean) / expected_mean;
    const double maxwell = 3.0 * kPi / 8.0;
    const double ratio_err = std::abs(msq / (mean * mean) - maxwell) / maxwell;

    const std::vector<double> lengths = {25.0, 50.0, 100.0, 200.0};
    std::vector<double> log_l, log_mean;
    for (double length : lengths) {
        std::vector<double> sample;
        sample.reserve(600);
        for (int r = 0; r < 600; ++r) {
            const FiberRealization fiber = synthesize_fiber(
                FiberSpec{length, coeff, 200, 91000 + static_cast<std::uint64_t>(r)});
            sample.push_back(dgd_at(fiber, 1310.0));
        }
        log_l.push_back(std::log(length));
        log_mean.push_back(std::log(mean_of(sample)));
    }
    const double exponent = fit_line(log_l, log_mean).slope;

    const bool pass = mean_err <= mean_tol && ratio_err <= ratio_tol && exponent >= slope_lo &&
                      exponent <= slope_hi;
    return {pass, "mean DGD " + fmt(mean) + " ps vs coeff*sqrt(L) = " + fmt(expected_mean) +
                      " (rel err " + fmt(mean_err) + "); <dgd^2>/<dgd>^2 rel err vs 3pi/8 = " +
                      fmt(ratio_err) + "; sqrt(L) exponent = " + fmt(exponent) + " (target 0.50 " +
                      "+- 0.02)"};
}

// --- criterion 5 -----------------------------------------------------------

Result criterion_scaling_shapes() {
    const double r2_min = 0.99;
    const double width_slope_lo = 1.95, width_slope_hi = 2.05;
    const int n_realizations = 400;
    const std::uint64_t seed = 4242;

    const std::vector<double> lengths = {10.0, 25.0, 50.0, 100.0, 200.0};
    const std::vector<double> one_width = {2.0};
    const auto by_length =
        ensemble_mean_infidelity(0.05, lengths, one_width, n_realizations, seed);
    std::vector<double> l_axis, p_axis;
    for (const EnsembleCell& cell : by_length) {
        l_axis.push_back(cell.length_km);
        p_axis.push_back(cell.p_e_mean);
    }
    const double r2 = fit_line(l_axis, p_axis).r2;

    const std::vector<double> one_length = {20.0};
    const std::vector<double> widths = {0.25, 0.5, 1.0, 2.0};
    const auto by_width =
        ensemble_mean_infidelity(0.05, one_length, widths, n_realizations, seed);
    std::vector<double> log_w, log_p;
    for (const EnsembleCell& cell : by_width) {
        log_w.push_back(std::log(cell.width_nm));
        log_p.push_back(std::log(cell.p_e_mean));
    }
    const double width_slope = fit_line(log_w, log_p).slope;

    const bool pass =
        r2 >= r2_min && width_slope >= width_slope_lo && width_slope <= width_slope_hi;
    return {pass, "p_e vs L linear R^2 = " + fmt(r2) + " (min " + fmt(r2_min) +
                      "); log-log bandwidth slope = " + fmt(width_slope) + " (target 2.0 +- 0.05)"};
}

// --- criterion 6 -----------------------------------------------------------

Result criterion_dgd_method_bound() {
    const double bound_tol = 1e-9;       // strict bound on first-order fibers
    const double violation_limit = 0.05; // multi-segment deviations stay small
    const SpectralGrid grid(1300.0, 1320.0, 161);
    const double window = 5.0;
    const std::vector<std::string> labels = {"H", "V", "D", "A", "R", "L"};

    double worst_excess = 0.0; // first-order: state curve minus bound
    for (double delay : {0.3, 0.5}) {
        const FiberRealization fiber({Segment{Stokes(0.6, -0.64, 0.48).normalized(), delay}});
        std::map<double, double> bound;
        for (const CurvePoint& pt : dgd_based_infidelity(dgd_spectrum(fiber, grid), window)) {
            bound[pt.wavelength_nm] = pt.p_e;
        }
        for (const std::string& label : labels) {
            const Trajectory traj =
                propagate_trajectory(fiber, stokes_to_jones(state_from_label(label)), grid);
            for (const CurvePoint& pt : rolling_infidelity(traj, window)) {
                const auto it = bound.find(pt.wavelength_nm);
                if (it != bound.end()) {
                    worst_excess = std::max(worst_excess, pt.p_e - it->second);
                }
            }
        }
    }

    const FiberRealization multi = synthesize_fiber(FiberSpec{30.0, 0.05, 40, 17});
    std::map<double, double> bound;
    for (const CurvePoint& pt : dgd_based_infidelity(dgd_spectrum(multi, grid), window)) {
        bound[pt.wavelength_nm] = pt.p_e;
    }
    double worst_violation = 0.0; // relative overshoot attributed to higher orders
    for (const std::string& label : labels) {
        const Trajectory traj =
            propagate_trajectory(multi, stokes_to_jones(state_from_label(label)), grid);
        for (const CurvePoint& pt : rolling_infidelity(traj, window)) {
            const auto it = bound.find(pt.wavelength_nm);
            if (it != bound.end() && it->second > 0.0) {
                worst_violation = std::max(worst_violation, (pt.p_e - it->second) / it->second);
            }
        }
    }

    const bool pass = worst_excess <= bound_tol && worst_violation <= violation_limit;
    return {pass, "first-order worst excess over bound = " + fmt(worst_excess) + " (tol " +
                      fmt(bound_tol) + "); 40-segment worst relative overshoot = " +
                      fmt(worst_violation) + " (limit " + fmt(violation_limit) + ")"};
}

// --- criterion 7 -----------------------------------------------------------

Result criterion_basis_geometry() {
    const double halving_tol = 1e-12;
    const double invariance_tol = 1e-12;
    const double ratio_tol = 1e-9;
    const double delta_theta = 1.3;
    Rng rng(777);
    const Stokes axis = random_unit_stokes(rng);

    const FourStateCircle orthogonal(axis, 0.0);
    const Stokes normal = axis.cross(FourStateCircle::in_plane_reference(axis)).normalized();
    const Stokes e1 = FourStateCircle::in_plane_reference(normal);
    const Stokes e2 = normal.cross(e1);
    const double beta = std::atan2(axis.dot(e2), axis.dot(e1));
    const FourStateCircle psp_aligned(normal, beta);
    const FourStateCircle symmetric(normal, beta + kPi / 4.0);

    const ProtocolSpec bb84 = ProtocolSpec::bb84();
    const double w_orth =
        protocol_error_budget(bb84, orthogonal, axis, delta_theta).weighted_average;
    const double w_psp =
        protocol_error_budget(bb84, psp_aligned, axis, delta_theta).weighted_average;
    const double w_sym =
        protocol_error_budget(bb84, symmetric, axis, delta_theta).weighted_average;
    const double halving_err =
        std::max(std::abs(w_psp - w_orth / 2), std::abs(w_sym - w_orth / 2)) / (w_orth / 2);

    std::vector<double> sixes;
    for (int trial = 0; trial < 100; ++trial) {
        const Stokes rot_axis = random_unit_stokes(rng);
        const double angle = (2.0 * rng.uniform01() - 1.0) * kPi;
        const StokesTriad triad = StokesTriad::rotated(PolRotation::about(rot_axis, angle));
        sixes.push_back(six_state_average(triad, axis, delta_theta));
    }
    const double six_mean = mean_of(sixes);
    double var = 0.0;
    for (double s : sixes) {
        var += (s - six_mean) * (s - six_mean);
    }
    const double six_std = std::sqrt(var / (sixes.size() - 1));

    double worst_ratio_err = 0.0;
    for (double r : {0.1, 1.0, 10.0}) {
        const OrientationResult result = optimize_orientation(
            bb84, axis, delta_theta, OrientationObjective::balance_ratio(r));
        const double got = result.budget.per_basis[0] / result.budget.per_basis[1];
        worst_ratio_err = std::max(worst_ratio_err, std::abs(got - r) / r);
    }

    const bool pass =
        halving_err <= halving_tol && six_std <= invariance_tol && worst_ratio_err <= ratio_tol;
    return {pass, "halving rel err = " + fmt(halving_err) + " (tol 1e-12); six-state std over " +
                      "100 orientations = " + fmt(six_std) + " (tol 1e-12); balance-ratio err = " +
                      fmt(worst_ratio_err) + " (tol 1e-9)"};
}

// --- criterion 8 -----------------------------------------------------------

Result criterion_psp_alignment() {
    const double tol_rad = 1e-9;
    const FiberRealization fiber({Segment{Stokes(0.3, -0.7, 0.65).normalized(), 0.3}});
    const AlignmentUnitaries alignment = alignment_unitaries(fiber, 1310.0);
    const SpectralGrid grid(1300.0, 1320.0, 81);

    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Eigen::Matrix2cd c = aligned_channel(fiber, alignment, grid[i]);
        const Stokes h_out = jones_to_stokes(JonesVector::from_amplitudes(c(0, 0), c(1, 0)));
        const Stokes v_out = jones_to_stokes(JonesVector::from_amplitudes(c(0, 1), c(1, 1)));
        worst = std::max(worst, std::acos(std::clamp(h_out.dot(Stokes(1, 0, 0)), -1.0, 1.0)));
        worst = std::max(worst, std::acos(std::clamp(v_out.dot(Stokes(-1, 0, 0)), -1.0, 1.0)));
    }
    return {worst <= tol_rad, "worst pole deviation across the band = " + fmt(worst) +
                                  " rad (tol " + fmt(tol_rad) + ")"};
}

// --- criterion 9 -----------------------------------------------------------

Result criterion_higher_order_smallness() {
    const double limit = 0.10;
    const SpectralGrid grid(1260.0, 1360.0, 401);
    const BandSpec band(1310.0, 20.0);

    std::vector<double> osc_ratios, psp_ratios;
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        const FiberRealization fiber = synthesize_fiber(FiberSpec{30.0, 0.05, 200, seed});
        const HigherOrderReport report = higher_order_report(fiber, band, grid);

        double band_dgd = 0.0;
        int count = 0;
        for (const DGDSample& s : dgd_spectrum(fiber, grid)) {
            if (s.wavelength_nm >= 1300.0 && s.wavelength_nm <= 1320.0) {
                band_dgd += s.dgd_ps;
                ++count;
            }
        }
        band_dgd /= count;
        const double first_order =
            small_angle_infidelity(ArcParams(arc_angle(band_dgd, band), kPi / 2));

        osc_ratios.push_back(report.p_e_osc ? *report.p_e_osc / first_order : 1.0);
        psp_ratios.push_back(report.p_e_psp_two_channel / first_order);
    }
    const double osc_median = median_of(osc_ratios);
    const double psp_median = median_of(psp_ratios);

    const double reference_two_channel = 2.0 * 0.35 * 0.35 / 48.0;
    std::printf("              note: two-channel PSP-rotation value for a 0.35 rad arc = %s "
                "(0.51%%); the commonly quoted deployed-fiber figure is ~0.4%%, which the "
                "formula does not reproduce\n",
                fmt(reference_two_channel).c_str());

    const bool pass = osc_median < limit && psp_median < limit;
    return {pass, "median oscillation/first-order = " + fmt(osc_median) +
                      "; median PSP-rotation/first-order = " + fmt(psp_median) + " (each must be " +
                      "< " + fmt(limit) + "); waveplate emulators spread the PMD-vector " +
                      "direction over the band, so the PSP-rotation term is not small here"};
}

// --- criterion 10 ----------------------------------------------------------

Result criterion_reproducibility() {
    const fs::path sim_a = fresh_dir("sim_a");
    const fs::path sim_b = fresh_dir("sim_b");
    const std::string sim_args = "simulate --length 25 --coeff 0.05 --segments 40 --seed 9 "
                                 "--start 1300 --stop 1320 --step 0.5 --states H,D,R --svg --out ";

    struct Job {
        std::string name;
        std::string args; // without --out
    };
    std::vector<Job> jobs;
    jobs.push_back({"simulate", sim_args.substr(0, sim_args.size() - 7)});

    if (run_cli(sim_args + sim_a.string()) != 0) {
        return {false, "simulate run failed"};
    }
    const std::string fiber_in = (sim_a / "fiber.json").string();
    const std::string scan_in = (sim_a / "scan.csv").string();

    jobs.push_back({"infidelity", "infidelity --fiber-in " + fiber_in +
                                      " --start 1300 --stop 1320 --step 0.25 --window 5"});
    jobs.push_back({"mmm", "mmm --scan " + scan_in});
    jobs.push_back({"sweep", "sweep --coeff 0.05 --lengths 10 --widths 0.5,1 --realizations 100 "
                             "--segments 24 --seed 5 --band-samples 9"});
    jobs.push_back({"qber-model", "qber-model --coeff 0.05 --width 1 --lengths 10,20,40 "
                                  "--baseline 0.01"});
    jobs.push_back({"basis-study", "basis-study --delta-theta 1 --axis 0.2,-0.5,0.84 --p-z 0.6"});

    for (const Job& job : jobs) {
        const fs::path a = job.name == "simulate" ? sim_a : fresh_dir(job.name + "_a");
        const fs::path b = job.name == "simulate" ? sim_b : fresh_dir(job.name + "_b");
        if (job.name != "simulate" && run_cli(job.args + " --out " + a.string()) != 0) {
            return {false, job.name + " run failed"};
        }
        if (run_cli(job.args + " --out " + b.string()) != 0) {
            return {false, job.name + " re-run failed"};
        }
        if (const auto mismatch = compare_dirs(a, b)) {
            return {false, job.name + ": " + *mismatch};
        }
    }
    return {true, "all 6 subcommands re-run byte-identically"};
}

} // namespace

int main() {
    struct Entry {
        const char* name;
        std::function<Result()> check;
    };
    const std::vector<Entry> criteria = {
        {"closed-form anchor", criterion_closed_form_anchor},
        {"arc-law equivalence", criterion_arc_law_equivalence},
        {"MMM exactness", criterion_mmm_exactness},
        {"ensemble DGD statistics", criterion_dgd_statistics},
        {"scaling shapes", criterion_scaling_shapes},
        {"DGD-method bound", criterion_dgd_method_bound},
        {"basis geometry", criterion_basis_geometry},
        {"PSP alignment", criterion_psp_alignment},
        {"higher-order smallness", criterion_higher_order_smallness},
        {"byte-identical re-runs", criterion_reproducibility},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Result result;
        try {
            result = criteria[i].check();
        } catch (const std::exception& e) {
            result = {false, std::string("exception: ") + e.what()};
        }
        if (!result.pass) {
            ++failures;
        }
        std::printf("criterion %2zu: %s  %-24s %s\n", i + 1, result.pass ? "PASS" : "FAIL",
                    criteria[i].name, result.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu of %zu criteria passed\n", criteria.size() - failures, criteria.size());
    return failures;
}
