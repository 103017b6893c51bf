#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pmdtk/fiber.hpp"
#include "pmdtk/polarization.hpp"
#include "pmdtk/spectral.hpp"

namespace pmdtk {

/// Arc geometry for the closed-form error laws: the rotation angle swept
/// across the band and the angle between the launched state and the
/// rotation axis.
struct ArcParams {
    double delta_theta; // radians, >= 0
    double phi;         // radians, in [0, pi/2]

    ArcParams(double delta_theta_rad, double phi_rad);
};

/// Band-averaged infidelity of a circular arc:
///   p_e = sin(phi)^2 / 2 * (1 - sinc(delta_theta / 2)),  sinc(x) = sin(x)/x.
double closed_form_infidelity(const ArcParams& arc);

/// Leading Taylor term of the above: p_e = sin(phi)^2 * delta_theta^2 / 48.
double small_angle_infidelity(const ArcParams& arc);

/// Band-averaged density matrix of a trajectory segment: trapezoidal mean of
/// |s(lambda)><s(lambda)| with uniform spectral weight, or with the optional
/// per-sample weights (e.g. a non-rectangular source spectrum).
DensityMatrix mixed_state(const Trajectory& traj, std::span<const double> weights = {});

/// Trajectory-integration infidelity:
///   p_e = 1 - (1/dlambda) Integral |<s(lambda)|s0>|^2 dlambda
/// by trapezoidal quadrature on the uniform grid. s0 defaults to the sample
/// at the central wavelength. Identical to
/// 1 - fidelity_pure_mixed(s0, mixed_state(traj)) by construction.
double trajectory_infidelity(const Trajectory& traj, const JonesVector* s0 = nullptr,
                             std::span<const double> weights = {});

struct CurvePoint {
    double wavelength_nm;
    double p_e;
};

/// Slide a window of the given width along the trajectory and integrate each
/// patch; windows that would extend past the grid edge are omitted, so every
/// value uses the full width. Requires width >= 3 grid steps.
std::vector<CurvePoint> rolling_infidelity(const Trajectory& traj, double window_nm);

/// The sin(phi) = 1 DGD-method curve: p_e(lambda) = arc_angle(mean DGD in the
/// window, window at lambda)^2 / 48. Upper-bounds rolling_infidelity on pure
/// first-order fibers. Centers follow the same full-window rule as
/// rolling_infidelity.
std::vector<CurvePoint> dgd_based_infidelity(std::span<const DGDSample> series, double window_nm);

/// How ensemble input states are drawn.
enum class InputStatePolicy {
    uniform,    // uniform over the Poincare sphere
    equatorial, // uniform on the great circle perpendicular to the PMD vector
                // at the band center (the sin(phi)=1 geometry of the DGD method)
};

struct EnsembleOptions {
    int n_segments = 200;
    double center_nm = 1310.0;
    int band_samples = 33;
    InputStatePolicy policy = InputStatePolicy::uniform;
};

struct EnsembleCell {
    double length_km;
    double width_nm;
    double p_e_mean;
    double p_e_std;        // sample standard deviation
    double p_e_dgd_method; // mean of per-realization small-angle DGD values
};

/// Monte Carlo mean infidelity over fiber realizations and random input
/// states, for every (length, width) pair. One RNG stream per realization
/// index, derived from the master seed, and common random numbers across
/// cells: realization r uses the same fiber axes and input state at every
/// (L, width), which removes sampling noise from scaling fits.
std::vector<EnsembleCell> ensemble_mean_infidelity(double pmd_coeff,
                                                   std::span<const double> lengths_km,
                                                   std::span<const double> widths_nm,
                                                   int n_realizations, std::uint64_t seed,
                                                   const EnsembleOptions& opts = {});

/// Small-angle analytic ensemble mean under the documented assumptions
/// (uniform input states, Maxwellian DGD):
///   E[p_e] = pi * pmd_coeff^2 * L * delta_omega^2 / 192.
double analytic_ensemble_mean(double pmd_coeff, double length_km, const BandSpec& band);

} // namespace pmdtk
