#include "pmdtk/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace pmdtk {

namespace {

double fold_angle(double cos_value) {
    // Angle to the nearer of +-axis: phi in [0, pi/2].
    return std::acos(std::clamp(std::abs(cos_value), 0.0, 1.0));
}

} // namespace

Stokes FourStateCircle::in_plane_reference(const Stokes& normal) {
    const Stokes n = normal.normalized();
    const Stokes ref = std::abs(n.x()) < 0.9 ? Stokes(1, 0, 0) : Stokes(0, 1, 0);
    return (ref - n * n.dot(ref)).normalized();
}

FourStateCircle::FourStateCircle(const Stokes& normal, double phase_rad)
    : normal_(normal), phase_(phase_rad) {
    require_unit(normal_, 1e-6, "circle normal");
    normal_.normalize();
    const Stokes e1 = in_plane_reference(normal_);
    const Stokes e2 = normal_.cross(e1);
    for (int k = 0; k < 4; ++k) {
        const double a = phase_ + k * std::numbers::pi / 2.0;
        states_[k] = std::cos(a) * e1 + std::sin(a) * e2;
    }
}

ProtocolSpec::ProtocolSpec(ProtocolKind k, std::vector<double> probs)
    : kind(k), basis_probs(std::move(probs)) {
    const std::size_t expected = kind == ProtocolKind::bb84 ? 2 : 3;
    if (basis_probs.size() != expected) {
        throw ValidationError("protocol needs " + std::to_string(expected) +
                              " basis probabilities");
    }
    double sum = 0.0;
    for (double p : basis_probs) {
        if (!(p > 0.0) || !(p < 1.0)) {
            throw ValidationError("basis probabilities must lie in (0, 1)");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        throw ValidationError("basis probabilities must sum to 1");
    }
}

ProtocolSpec ProtocolSpec::bb84(double p_z) { return {ProtocolKind::bb84, {p_z, 1.0 - p_z}}; }

ProtocolSpec ProtocolSpec::six_state() {
    return {ProtocolKind::six_state, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}};
}

StokesTriad::StokesTriad(const std::array<Stokes, 3>& a) : axes(a) {
    for (int i = 0; i < 3; ++i) {
        for (int j = i; j < 3; ++j) {
            const double expected = i == j ? 1.0 : 0.0;
            if (std::abs(axes[i].dot(axes[j]) - expected) > 1e-10) {
                throw ValidationError("six-state orientation must be an orthonormal triad");
            }
        }
    }
}

StokesTriad StokesTriad::identity() {
    return StokesTriad({Stokes(1, 0, 0), Stokes(0, 1, 0), Stokes(0, 0, 1)});
}

StokesTriad StokesTriad::rotated(const PolRotation& rot) {
    return StokesTriad({rot.apply(Stokes(1, 0, 0)), rot.apply(Stokes(0, 1, 0)),
                        rot.apply(Stokes(0, 0, 1))});
}

std::array<double, 4> state_pmd_angles(const FourStateCircle& circle, const Stokes& omega_axis) {
    require_unit(omega_axis, 1e-6, "PMD axis");
    const Stokes axis = omega_axis.normalized();
    std::array<double, 4> phi{};
    for (int k = 0; k < 4; ++k) {
        phi[k] = fold_angle(circle.states()[k].dot(axis));
    }
    return phi;
}

namespace {

ErrorBudget budget_from_states(const std::vector<double>& per_state,
                               const std::vector<double>& basis_probs) {
    ErrorBudget budget;
    budget.per_state = per_state;
    const std::size_t n_bases = basis_probs.size();
    budget.per_basis.resize(n_bases);
    budget.weighted_average = 0.0;
    for (std::size_t b = 0; b < n_bases; ++b) {
        double mean;
        if (per_state.size() == 4) {
            // 4-state circle order: basis 0 holds states {0, 2}, basis 1 {1, 3}.
            mean = 0.5 * (per_state[b] + per_state[b + 2]);
        } else {
            mean = 0.5 * (per_state[2 * b] + per_state[2 * b + 1]);
        }
        budget.per_basis[b] = mean;
        budget.weighted_average += basis_probs[b] * mean;
    }
    return budget;
}

} // namespace

ErrorBudget protocol_error_budget(const ProtocolSpec& protocol, const FourStateCircle& circle,
                                  const Stokes& omega_axis, double delta_theta) {
    if (protocol.kind != ProtocolKind::bb84) {
        throw ValidationError("a 4-state circle geometry requires a BB84-type protocol");
    }
    const auto phi = state_pmd_angles(circle, omega_axis);
    std::vector<double> per_state(4);
    for (int k = 0; k < 4; ++k) {
        per_state[k] = closed_form_infidelity(ArcParams(delta_theta, phi[k]));
    }
    return budget_from_states(per_state, protocol.basis_probs);
}

ErrorBudget protocol_error_budget(const ProtocolSpec& protocol, const StokesTriad& triad,
                                  const Stokes& omega_axis, double delta_theta) {
    if (protocol.kind != ProtocolKind::six_state) {
        throw ValidationError("a triad geometry requires the six-state protocol");
    }
    require_unit(omega_axis, 1e-6, "PMD axis");
    const Stokes axis = omega_axis.normalized();
    std::vector<double> per_state(6);
    for (int b = 0; b < 3; ++b) {
        const double phi = fold_angle(triad.axes[b].dot(axis));
        const double p = closed_form_infidelity(ArcParams(delta_theta, phi));
        per_state[2 * b] = p;     // +axis state
        per_state[2 * b + 1] = p; // -axis state (same folded angle)
    }
    return budget_from_states(per_state, protocol.basis_probs);
}

double six_state_average(const StokesTriad& triad, const Stokes& omega_axis, double delta_theta) {
    const auto budget =
        protocol_error_budget(ProtocolSpec::six_state(), triad, omega_axis, delta_theta);
    double sum = 0.0;
    for (double p : budget.per_state) {
        sum += p;
    }
    return sum / 6.0;
}

OrientationObjective OrientationObjective::min_weighted() {
    return {Kind::min_weighted, 1.0};
}

OrientationObjective OrientationObjective::balance_ratio(double r) {
    if (r < 0.0) {
        throw ValidationError("per-basis error ratio must be non-negative");
    }
    return {Kind::balance_ratio, r};
}

OrientationResult optimize_orientation(const ProtocolSpec& protocol, const Stokes& omega_axis,
                                       double delta_theta, const OrientationObjective& objective) {
    if (protocol.kind != ProtocolKind::bb84) {
        throw ValidationError("orientation optimization applies to BB84-type protocols");
    }
    require_unit(omega_axis, 1e-6, "PMD axis");
    const Stokes axis = omega_axis.normalized();

    double alpha;
    if (objective.kind == OrientationObjective::Kind::balance_ratio) {
        if (objective.ratio < 0.0) {
            throw ValidationError("per-basis error ratio must be non-negative");
        }
        alpha = std::atan(std::sqrt(objective.ratio));
    } else {
        // p_Z sin(a)^2 + p_X cos(a)^2 is extremal only at a = 0 and pi/2;
        // put the more probable basis on the PSPs (zero error), ties at 0.
        alpha = protocol.basis_probs[0] >= protocol.basis_probs[1] ? 0.0
                                                                   : std::numbers::pi / 2.0;
    }

    // A circle whose plane contains the axis: any normal perpendicular to it.
    const Stokes normal = axis.cross(FourStateCircle::in_plane_reference(axis)).normalized();
    const Stokes e1 = FourStateCircle::in_plane_reference(normal);
    const Stokes e2 = normal.cross(e1);
    const double beta = std::atan2(axis.dot(e2), axis.dot(e1));
    FourStateCircle circle(normal, beta + alpha);

    OrientationResult result{circle, alpha,
                             protocol_error_budget(protocol, circle, axis, delta_theta)};
    return result;
}

AlignmentUnitaries alignment_unitaries(const FiberRealization& fiber, double lambda0_nm,
                                       double probe_step_nm) {
    if (!(probe_step_nm > 0.0) || !(lambda0_nm - probe_step_nm > 0.0)) {
        throw ValidationError("alignment probe step out of range");
    }
    const double probe[3] = {lambda0_nm - probe_step_nm, lambda0_nm, lambda0_nm + probe_step_nm};
    const auto pmd = pmd_vector_spectrum(fiber, probe);
    if (pmd[0].dgd_ps() < 1e-6) {
        throw ValidationError("PSPs undefined: DGD below 1e-6 ps at the alignment wavelength");
    }
    const Stokes p1_stokes = pmd[0].omega_vec_ps.normalized();
    const JonesVector p1 = stokes_to_jones(p1_stokes);
    const JonesVector p2 = stokes_to_jones(-p1_stokes);

    AlignmentUnitaries a;
    // U1 = |H><p1| + |V><p2|: rows are the adjoints of the PSP states.
    a.u1.row(0) = p1.amplitudes().adjoint();
    a.u1.row(1) = p2.amplitudes().adjoint();
    a.u2 = a.u1 * transfer_unitary(fiber, lambda0_nm);
    return a;
}

Eigen::Matrix2cd aligned_channel(const FiberRealization& fiber,
                                 const AlignmentUnitaries& alignment, double wavelength_nm) {
    return alignment.u1 * transfer_unitary(fiber, wavelength_nm) * alignment.u2.adjoint();
}

HigherOrderReport higher_order_report(const FiberRealization& fiber, const BandSpec& band,
                                      const SpectralGrid& grid) {
    const double lo = band.center_nm - band.width_nm / 2.0;
    const double hi = band.center_nm + band.width_nm / 2.0;
    if (lo < grid.front() - 1e-9 || hi > grid.back() + 1e-9) {
        throw ValidationError("band extends past the measured grid");
    }

    const auto pmd = pmd_vector_spectrum(fiber, grid);
    std::vector<double> lams, dgds;
    lams.reserve(pmd.size());
    dgds.reserve(pmd.size());
    for (const PMDVectorSample& s : pmd) {
        lams.push_back(s.wavelength_nm);
        dgds.push_back(s.dgd_ps());
    }

    HigherOrderReport report;
    report.delta_lambda0_nm = extremum_half_period(lams, dgds);

    double band_dgd = 0.0;
    int band_count = 0;
    for (std::size_t i = 0; i < pmd.size(); ++i) {
        if (lams[i] >= lo - 1e-9 && lams[i] <= hi + 1e-9) {
            band_dgd += dgds[i];
            ++band_count;
        }
    }
    if (band_count == 0) {
        throw ValidationError("band is narrower than the grid step");
    }
    band_dgd /= band_count;

    if (report.delta_lambda0_nm) {
        // Mean arc angle accumulated per nm of wavelength, evaluated at the
        // band center, times the extremum half-period.
        const double arc_per_nm = arc_angle(band_dgd, BandSpec(band.center_nm, 1.0));
        const double theta0 = *report.delta_lambda0_nm * arc_per_nm;
        const double theta_osc = theta0 / 4.0;
        report.p_e_osc = theta_osc * theta_osc / 48.0;
    }

    // Accumulated angular path of the PMD-vector direction across the band.
    double arc = 0.0;
    const Stokes* prev = nullptr;
    for (std::size_t i = 0; i < pmd.size(); ++i) {
        if (lams[i] < lo - 1e-9 || lams[i] > hi + 1e-9) {
            continue;
        }
        if (dgds[i] < 1e-9) {
            continue; // direction undefined at (numerically) zero DGD
        }
        const Stokes& dir = pmd[i].omega_vec_ps;
        if (prev != nullptr) {
            const double cosang =
                std::clamp(prev->dot(dir) / (prev->norm() * dir.norm()), -1.0, 1.0);
            arc += std::acos(cosang);
        }
        prev = &dir;
    }
    report.psp_arc_rad = arc;
    report.p_e_psp_two_channel = 2.0 * arc * arc / 48.0;
    return report;
}

} // namespace pmdtk
