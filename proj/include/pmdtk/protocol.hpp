#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "pmdtk/fiber.hpp"
#include "pmdtk/infidelity.hpp"
#include "pmdtk/mmm.hpp"
#include "pmdtk/polarization.hpp"
#include "pmdtk/spectral.hpp"

namespace pmdtk {

/// The four BB84/BBM92 measurement states on a great circle of the Poincare
/// sphere: states at phase + {0, 90, 180, 270} degrees in the plane
/// perpendicular to `normal`. The in-plane phase origin is the canonical
/// direction returned by in_plane_reference(normal), so a circle is fully
/// determined by (normal, phase).
class FourStateCircle {
public:
    FourStateCircle(const Stokes& normal, double phase_rad);

    const Stokes& normal() const { return normal_; }
    double phase() const { return phase_; }
    const std::array<Stokes, 4>& states() const { return states_; }

    /// Canonical unit vector perpendicular to `normal` fixing phase = 0:
    /// the normalized rejection of x-hat (or y-hat when normal is within
    /// 0.1 of +-x-hat) from `normal`.
    static Stokes in_plane_reference(const Stokes& normal);

private:
    Stokes normal_;
    double phase_;
    std::array<Stokes, 4> states_;
};

enum class ProtocolKind { bb84, six_state };

/// Protocol identity plus basis-choice probabilities: 2 entries for BB84
/// (basis of states {0,2}, basis of states {1,3}), 3 for six-state.
struct ProtocolSpec {
    ProtocolKind kind;
    std::vector<double> basis_probs;

    ProtocolSpec(ProtocolKind k, std::vector<double> probs);

    static ProtocolSpec bb84(double p_z = 0.5);
    static ProtocolSpec six_state();
};

/// Right-handed orthonormal Stokes triad: the three basis axes of a
/// six-state measurement (states at +- each axis).
struct StokesTriad {
    std::array<Stokes, 3> axes;

    explicit StokesTriad(const std::array<Stokes, 3>& a);
    static StokesTriad identity();
    /// Triad rotated by `rot` from the identity triad.
    static StokesTriad rotated(const PolRotation& rot);
};

struct ErrorBudget {
    std::vector<double> per_state;
    std::vector<double> per_basis; // mean of each basis's states
    double weighted_average;       // sum of basis_prob * per_basis
};

/// Angle between each circle state and the PMD axis, folded into [0, pi/2]
/// (the error law depends only on sin(phi)^2).
std::array<double, 4> state_pmd_angles(const FourStateCircle& circle, const Stokes& omega_axis);

/// Per-state closed-form errors for the protocol geometry against a PMD
/// vector along `omega_axis` with band arc angle `delta_theta`.
ErrorBudget protocol_error_budget(const ProtocolSpec& protocol, const FourStateCircle& circle,
                                  const Stokes& omega_axis, double delta_theta);
ErrorBudget protocol_error_budget(const ProtocolSpec& protocol, const StokesTriad& triad,
                                  const Stokes& omega_axis, double delta_theta);

/// Mean closed-form error over the six states of the triad. Equal to
/// (1/3)(1 - sinc(delta_theta/2)) for every orientation.
double six_state_average(const StokesTriad& triad, const Stokes& omega_axis, double delta_theta);

struct OrientationObjective {
    enum class Kind { min_weighted, balance_ratio } kind;
    double ratio = 1.0; // target per-basis error ratio p_e(Z)/p_e(X)

    static OrientationObjective min_weighted();
    static OrientationObjective balance_ratio(double r);
};

struct OrientationResult {
    FourStateCircle circle;
    /// In-plane angle of state 0 measured from the PMD axis; the single free
    /// parameter of the search family (circle plane containing the axis).
    double alpha_rad;
    ErrorBudget budget;
};

/// Choose the 4-state circle orientation within the family of circles whose
/// plane contains the PMD axis. min_weighted minimizes
/// p_Z sin(alpha)^2 + p_X cos(alpha)^2 (ties resolved to alpha = 0);
/// balance_ratio(r) returns alpha = arctan(sqrt(r)), which makes the
/// per-basis error ratio exactly r.
OrientationResult optimize_orientation(const ProtocolSpec& protocol, const Stokes& omega_axis,
                                       double delta_theta, const OrientationObjective& objective);

struct AlignmentUnitaries {
    Eigen::Matrix2cd u1; // maps the PSP pair (p1, p2) to (H, V)
    Eigen::Matrix2cd u2; // u1 * transfer_unitary(fiber, lambda0)
};

/// Receiver alignment for the PSPs at lambda0: U1 = |H><p1| + |V><p2| built
/// from the PMD axis measured by a central finite difference with the given
/// probe step. Throws when the DGD at lambda0 is below 1e-6 ps (PSPs
/// undefined).
AlignmentUnitaries alignment_unitaries(const FiberRealization& fiber, double lambda0_nm,
                                       double probe_step_nm = 0.05);

/// The aligned composite channel U1 U(lambda) U2^dag: identity at lambda0,
/// PSPs mapped onto the H/V poles.
Eigen::Matrix2cd aligned_channel(const FiberRealization& fiber, const AlignmentUnitaries& alignment,
                                 double wavelength_nm);

struct HigherOrderReport {
    /// Extremum half-period of the DGD series over the full grid.
    std::optional<double> delta_lambda0_nm;
    /// DGD-oscillation error (delta_theta0 / 4)^2 / 48 with
    /// delta_theta0 = delta_lambda0 * mean d(delta_theta)/d(lambda) over the
    /// band. Unavailable when delta_lambda0 is.
    std::optional<double> p_e_osc;
    /// Accumulated angular path of the PMD-vector direction over the band.
    double psp_arc_rad;
    /// PSP-rotation error for two channels: 2 psp_arc^2 / 48.
    double p_e_psp_two_channel;
};

/// Second-order PMD contributions for a band inside the measured grid.
HigherOrderReport higher_order_report(const FiberRealization& fiber, const BandSpec& band,
                                      const SpectralGrid& grid);

} // namespace pmdtk
