#include "pmdtk/infidelity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace pmdtk {

namespace {

double sinc(double x) {
    if (x == 0.0) {
        return 1.0;
    }
    return std::sin(x) / x;
}

void validate_uniform(std::span<const double> wavelengths) {
    if (wavelengths.size() < 2) {
        return;
    }
    const double step = wavelengths[1] - wavelengths[0];
    if (step <= 0.0) {
        throw ValidationError("trajectory wavelengths must be strictly increasing");
    }
    for (std::size_t i = 1; i < wavelengths.size(); ++i) {
        if (std::abs(wavelengths[i] - wavelengths[i - 1] - step) > 1e-9) {
            throw ValidationError("trajectory requires a uniform wavelength grid");
        }
    }
}

// Trapezoid coefficient for sample i of n.
double trapezoid_coeff(std::size_t i, std::size_t n) {
    if (n == 1) {
        return 1.0;
    }
    return (i == 0 || i + 1 == n) ? 0.5 : 1.0;
}

// Weighted trapezoidal mean of the Stokes samples in [first, first+count).
Stokes mean_stokes(const Trajectory& traj, std::size_t first, std::size_t count,
                   std::span<const double> weights) {
    if (count == 0) {
        throw ValidationError("trajectory segment is empty");
    }
    if (!weights.empty() && weights.size() != traj.states.size()) {
        throw ValidationError("spectral weights must match the trajectory length");
    }
    Stokes acc = Stokes::Zero();
    double total = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t i = first + k;
        double w = trapezoid_coeff(k, count);
        if (!weights.empty()) {
            if (weights[i] < 0.0) {
                throw ValidationError("spectral weights must be non-negative");
            }
            w *= weights[i];
        }
        acc += w * traj.states[i];
        total += w;
    }
    if (total <= 0.0) {
        throw ValidationError("spectral weights sum to zero over the segment");
    }
    return acc / total;
}

} // namespace

ArcParams::ArcParams(double delta_theta_rad, double phi_rad)
    : delta_theta(delta_theta_rad), phi(phi_rad) {
    if (delta_theta < 0.0) {
        throw ValidationError("arc angle must be non-negative");
    }
    if (phi < 0.0 || phi > std::numbers::pi / 2.0 + 1e-12) {
        throw ValidationError("phi must lie in [0, pi/2]");
    }
}

double closed_form_infidelity(const ArcParams& arc) {
    const double s = std::sin(arc.phi);
    return 0.5 * s * s * (1.0 - sinc(arc.delta_theta / 2.0));
}

double small_angle_infidelity(const ArcParams& arc) {
    const double s = std::sin(arc.phi);
    return s * s * arc.delta_theta * arc.delta_theta / 48.0;
}

DensityMatrix mixed_state(const Trajectory& traj, std::span<const double> weights) {
    if (traj.states.empty()) {
        throw ValidationError("cannot average an empty trajectory");
    }
    validate_uniform(traj.wavelengths_nm);
    const Stokes mean = mean_stokes(traj, 0, traj.states.size(), weights);
    Eigen::Matrix2cd m;
    const Complex i1(0.0, 1.0);
    // rho = (I + mean . tau) / 2 in the (sigma_z, sigma_x, sigma_y) order.
    m << 1.0 + mean.x(), mean.y() - i1 * mean.z(), mean.y() + i1 * mean.z(), 1.0 - mean.x();
    return DensityMatrix(0.5 * m);
}

double trajectory_infidelity(const Trajectory& traj, const JonesVector* s0,
                             std::span<const double> weights) {
    if (traj.states.size() < 2) {
        throw ValidationError("trajectory integration needs at least 2 samples");
    }
    if (traj.wavelengths_nm.size() != traj.states.size()) {
        throw ValidationError("trajectory wavelength/state lengths differ");
    }
    validate_uniform(traj.wavelengths_nm);
    const Stokes target =
        s0 ? jones_to_stokes(*s0) : traj.states[(traj.states.size() - 1) / 2];
    const Stokes mean = mean_stokes(traj, 0, traj.states.size(), weights);
    return std::clamp(0.5 * (1.0 - target.dot(mean)), 0.0, 1.0);
}

std::vector<CurvePoint> rolling_infidelity(const Trajectory& traj, double window_nm) {
    if (traj.states.size() < 2 || traj.wavelengths_nm.size() != traj.states.size()) {
        throw ValidationError("rolling integration needs a sampled trajectory");
    }
    validate_uniform(traj.wavelengths_nm);
    const double step = traj.wavelengths_nm[1] - traj.wavelengths_nm[0];
    const double span = traj.wavelengths_nm.back() - traj.wavelengths_nm.front();
    if (window_nm < 3.0 * step - 1e-9) {
        throw ValidationError("window must cover at least 3 grid steps");
    }
    if (window_nm > span + 1e-9) {
        throw ValidationError("window is wider than the grid span");
    }
    // Symmetric sample window: the largest half-width fitting window_nm / 2.
    const auto half = static_cast<std::size_t>(std::floor(window_nm / 2.0 / step + 1e-9));
    std::vector<CurvePoint> out;
    for (std::size_t c = half; c + half < traj.states.size(); ++c) {
        const std::size_t first = c - half;
        const std::size_t count = 2 * half + 1;
        const Stokes mean = mean_stokes(traj, first, count, {});
        const double p = 0.5 * (1.0 - traj.states[c].dot(mean));
        out.push_back({traj.wavelengths_nm[c], std::clamp(p, 0.0, 1.0)});
    }
    return out;
}

std::vector<CurvePoint> dgd_based_infidelity(std::span<const DGDSample> series, double window_nm) {
    if (series.empty()) {
        throw ValidationError("DGD series is empty");
    }
    if (window_nm <= 0.0) {
        throw ValidationError("window must be positive");
    }
    std::vector<double> lams(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        lams[i] = series[i].wavelength_nm;
    }
    validate_uniform(lams);
    if (series.size() == 1) {
        // Degenerate single-sample series: one value at its own wavelength.
        const double theta = arc_angle(series[0].dgd_ps, BandSpec(lams[0], window_nm));
        return {{lams[0], theta * theta / 48.0}};
    }
    const double step = lams[1] - lams[0];
    const auto half = static_cast<std::size_t>(std::floor(window_nm / 2.0 / step + 1e-9));
    if (2 * half + 1 > series.size()) {
        throw ValidationError("window is wider than the DGD series span");
    }
    std::vector<CurvePoint> out;
    for (std::size_t c = half; c + half < series.size(); ++c) {
        double mean_dgd = 0.0;
        for (std::size_t i = c - half; i <= c + half; ++i) {
            mean_dgd += series[i].dgd_ps;
        }
        mean_dgd /= static_cast<double>(2 * half + 1);
        const double theta = arc_angle(mean_dgd, BandSpec(lams[c], window_nm));
        out.push_back({lams[c], theta * theta / 48.0});
    }
    return out;
}

namespace {

// Orthonormal pair spanning the plane perpendicular to a unit axis.
std::pair<Stokes, Stokes> plane_basis(const Stokes& axis) {
    const Stokes ref =
        std::abs(axis.x()) < 0.9 ? Stokes(1, 0, 0) : Stokes(0, 1, 0);
    const Stokes e1 = (ref - axis * ref.dot(axis)).normalized();
    return {e1, axis.cross(e1)};
}

} // namespace

std::vector<EnsembleCell> ensemble_mean_infidelity(double pmd_coeff,
                                                   std::span<const double> lengths_km,
                                                   std::span<const double> widths_nm,
                                                   int n_realizations, std::uint64_t seed,
                                                   const EnsembleOptions& opts) {
    if (lengths_km.empty() || widths_nm.empty()) {
        throw ValidationError("ensemble sweep needs at least one length and one width");
    }
    if (n_realizations < 100) {
        throw ValidationError("ensemble needs at least 100 realizations");
    }
    if (pmd_coeff < 0.0) {
        throw ValidationError("PMD coefficient must be non-negative");
    }
    if (opts.n_segments < 1 || opts.band_samples < 3) {
        throw ValidationError("ensemble options out of range");
    }
    for (double l : lengths_km) {
        if (!(l > 0.0)) {
            throw ValidationError("sweep lengths must be positive");
        }
    }
    for (double w : widths_nm) {
        if (!(w > 0.0)) {
            throw ValidationError("sweep widths must be positive");
        }
    }

    const std::size_t n_cells = lengths_km.size() * widths_nm.size();
    struct Accum {
        int n = 0;
        double mean = 0.0, m2 = 0.0, dgd_sum = 0.0;
        void add(double p, double p_dgd) {
            ++n;
            const double d = p - mean;
            mean += d / n;
            m2 += d * (p - mean);
            dgd_sum += p_dgd;
        }
    };
    std::vector<Accum> cells(n_cells);

    const double probe_step_nm = 0.05;
    const double center = opts.center_nm;

    for (int r = 0; r < n_realizations; ++r) {
        // Common random numbers: realization r reuses its axes and state
        // draw at every (length, width) cell, so scaling fits see smooth
        // curves instead of independent sampling noise.
        Rng axis_rng(derive_stream(seed, 2 * static_cast<std::uint64_t>(r)));
        std::vector<Stokes> axes(static_cast<std::size_t>(opts.n_segments));
        for (Stokes& a : axes) {
            a = random_unit_stokes(axis_rng);
        }
        Rng state_rng(derive_stream(seed, 2 * static_cast<std::uint64_t>(r) + 1));
        const Stokes uniform_state = random_unit_stokes(state_rng);
        const double chi = state_rng.uniform(0.0, 2.0 * std::numbers::pi);

        for (std::size_t li = 0; li < lengths_km.size(); ++li) {
            const double delay = std::sqrt(3.0 * std::numbers::pi / 8.0) * pmd_coeff *
                                 std::sqrt(lengths_km[li] / opts.n_segments);
            std::vector<Segment> segs(axes.size());
            for (std::size_t k = 0; k < axes.size(); ++k) {
                segs[k] = {axes[k], delay};
            }
            const FiberRealization fiber(std::move(segs));

            // PMD vector at the band center (single-cell finite difference).
            const double probe[3] = {center - probe_step_nm, center, center + probe_step_nm};
            const auto pmd = pmd_vector_spectrum(fiber, probe);
            const double dgd_c = pmd[0].dgd_ps();

            JonesVector input = jones_h();
            if (opts.policy == InputStatePolicy::uniform) {
                input = stokes_to_jones(uniform_state);
            } else {
                // Launch the state whose output at the band center sits on
                // the great circle perpendicular to the PMD vector.
                const Stokes axis =
                    dgd_c > 1e-12 ? Stokes(pmd[0].omega_vec_ps.normalized()) : Stokes(1, 0, 0);
                const auto [e1, e2] = plane_basis(axis);
                const Stokes target = std::cos(chi) * e1 + std::sin(chi) * e2;
                const PolRotation r_c = rotation_from_unitary(transfer_unitary(fiber, center));
                input = stokes_to_jones(r_c.transposed().apply(target));
            }

            for (std::size_t wi = 0; wi < widths_nm.size(); ++wi) {
                const double w = widths_nm[wi];
                const SpectralGrid grid(center - w / 2.0, center + w / 2.0,
                                        static_cast<std::size_t>(opts.band_samples));
                const double p = trajectory_infidelity(propagate_trajectory(fiber, input, grid));
                const double theta = arc_angle(dgd_c, BandSpec(center, w));
                cells[li * widths_nm.size() + wi].add(p, theta * theta / 48.0);
            }
        }
    }

    std::vector<EnsembleCell> out;
    out.reserve(n_cells);
    for (std::size_t li = 0; li < lengths_km.size(); ++li) {
        for (std::size_t wi = 0; wi < widths_nm.size(); ++wi) {
            const Accum& a = cells[li * widths_nm.size() + wi];
            EnsembleCell cell;
            cell.length_km = lengths_km[li];
            cell.width_nm = widths_nm[wi];
            cell.p_e_mean = a.mean;
            cell.p_e_std = a.n > 1 ? std::sqrt(a.m2 / (a.n - 1)) : 0.0;
            cell.p_e_dgd_method = a.dgd_sum / a.n;
            out.push_back(cell);
        }
    }
    return out;
}

double analytic_ensemble_mean(double pmd_coeff, double length_km, const BandSpec& band) {
    const double dw_rad_per_ps = delta_omega(band) * 1e-12;
    return std::numbers::pi * pmd_coeff * pmd_coeff * length_km * dw_rad_per_ps * dw_rad_per_ps /
           192.0;
}

} // namespace pmdtk
