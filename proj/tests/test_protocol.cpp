#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>

#include "pmdtk/fiber.hpp"
#include "pmdtk/infidelity.hpp"
#include "pmdtk/protocol.hpp"
#include "pmdtk/rng.hpp"

using namespace pmdtk;

namespace {

constexpr double kPi = std::numbers::pi;

double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

/// The circle whose plane contains `axis`, with state 0 rotated by `alpha`
/// from the axis (the same construction optimize_orientation uses).
FourStateCircle circle_through_axis(const Stokes& axis, double alpha) {
    const Stokes normal = axis.cross(FourStateCircle::in_plane_reference(axis)).normalized();
    const Stokes e1 = FourStateCircle::in_plane_reference(normal);
    const Stokes e2 = normal.cross(e1);
    const double beta = std::atan2(axis.dot(e2), axis.dot(e1));
    return FourStateCircle(normal, beta + alpha);
}

PolRotation random_rotation(Rng& rng) {
    const Stokes axis = random_unit_stokes(rng);
    const double angle = (2.0 * rng.uniform01() - 1.0) * kPi;
    return PolRotation::about(axis, angle);
}

} // namespace

TEST_CASE("four-state circle states are unit, coplanar, and 90 degrees apart") {
    Rng rng(101);
    for (int trial = 0; trial < 20; ++trial) {
        const Stokes n = random_unit_stokes(rng);
        const double phase = (2.0 * rng.uniform01() - 1.0) * kPi;
        const FourStateCircle circle(n, phase);
        const auto& s = circle.states();
        for (int k = 0; k < 4; ++k) {
            CHECK(s[k].norm() == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(std::abs(s[k].dot(circle.normal())) < 1e-12);
            CHECK(std::abs(s[k].dot(s[(k + 1) % 4])) < 1e-12);
        }
        CHECK(s[2].isApprox(-s[0], 1e-12));
        CHECK(s[3].isApprox(-s[1], 1e-12));
        // phase is measured from the canonical in-plane reference
        const Stokes e1 = FourStateCircle::in_plane_reference(n);
        CHECK(s[0].dot(e1) == doctest::Approx(std::cos(phase)).epsilon(1e-10));
    }
    CHECK_THROWS_AS(FourStateCircle(Stokes(0.5, 0, 0), 0.0), ValidationError);
    CHECK_THROWS_AS(FourStateCircle(Stokes(0, 0, 0), 0.0), ValidationError);
}

TEST_CASE("in-plane reference is deterministic and perpendicular to the normal") {
    CHECK(FourStateCircle::in_plane_reference(Stokes(0, 0, 1)).isApprox(Stokes(1, 0, 0), 1e-12));
    CHECK(FourStateCircle::in_plane_reference(Stokes(0, 1, 0)).isApprox(Stokes(1, 0, 0), 1e-12));
    // near +-x-hat the fallback reference keeps the rejection well conditioned
    CHECK(FourStateCircle::in_plane_reference(Stokes(1, 0, 0)).isApprox(Stokes(0, 1, 0), 1e-12));
    CHECK(FourStateCircle::in_plane_reference(Stokes(-1, 0, 0)).isApprox(Stokes(0, 1, 0), 1e-12));
    Rng rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        const Stokes n = random_unit_stokes(rng);
        const Stokes e1 = FourStateCircle::in_plane_reference(n);
        CHECK(e1.norm() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(e1.dot(n)) < 1e-12);
    }
}

TEST_CASE("protocol specs validate their basis probabilities") {
    const ProtocolSpec bb = ProtocolSpec::bb84();
    CHECK(bb.kind == ProtocolKind::bb84);
    REQUIRE(bb.basis_probs.size() == 2);
    CHECK(bb.basis_probs[0] == doctest::Approx(0.5));
    CHECK(ProtocolSpec::bb84(0.9).basis_probs[1] == doctest::Approx(0.1));

    const ProtocolSpec six = ProtocolSpec::six_state();
    REQUIRE(six.basis_probs.size() == 3);
    for (double p : six.basis_probs) {
        CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    }

    const double third = 1.0 / 3.0;
    CHECK_THROWS_AS(ProtocolSpec(ProtocolKind::bb84, {third, third, third}), ValidationError);
    CHECK_THROWS_AS(ProtocolSpec(ProtocolKind::six_state, {0.5, 0.5}), ValidationError);
    CHECK_THROWS_AS(ProtocolSpec(ProtocolKind::bb84, {0.5, 0.6}), ValidationError);
    CHECK_THROWS_AS(ProtocolSpec(ProtocolKind::bb84, {1.0, 0.0}), ValidationError);
    CHECK_THROWS_AS(ProtocolSpec(ProtocolKind::bb84, {1.1, -0.1}), ValidationError);
}

TEST_CASE("stokes triads must be orthonormal") {
    CHECK_NOTHROW(StokesTriad::identity());
    Rng rng(7);
    const StokesTriad rotated = StokesTriad::rotated(random_rotation(rng));
    for (int i = 0; i < 3; ++i) {
        CHECK(rotated.axes[i].norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(
        StokesTriad({Stokes(1, 0, 0), Stokes(1, 0, 0), Stokes(0, 0, 1)}), ValidationError);
    CHECK_THROWS_AS(
        StokesTriad({Stokes(2, 0, 0), Stokes(0, 1, 0), Stokes(0, 0, 1)}), ValidationError);
}

TEST_CASE("state angles to the PMD axis fold into the first quadrant") {
    const FourStateCircle circle(Stokes(0, 0, 1), 0.0); // states x, y, -x, -y
    const auto on_axis = state_pmd_angles(circle, Stokes(1, 0, 0));
    CHECK(on_axis[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(on_axis[1] == doctest::Approx(kPi / 2).epsilon(1e-12));
    CHECK(on_axis[2] == doctest::Approx(0.0).epsilon(1e-12)); // -x folds onto x
    CHECK(on_axis[3] == doctest::Approx(kPi / 2).epsilon(1e-12));

    const auto flipped = state_pmd_angles(circle, Stokes(-1, 0, 0));
    for (int k = 0; k < 4; ++k) {
        CHECK(flipped[k] == doctest::Approx(on_axis[k]).epsilon(1e-12));
    }

    const Stokes diag = Stokes(1, 1, 0).normalized();
    for (double phi : state_pmd_angles(circle, diag)) {
        CHECK(phi == doctest::Approx(kPi / 4).epsilon(1e-12));
    }
    for (double phi : state_pmd_angles(circle, Stokes(0, 0, 1))) {
        CHECK(phi == doctest::Approx(kPi / 2).epsilon(1e-12));
    }
    CHECK_THROWS_AS(state_pmd_angles(circle, Stokes(0.3, 0, 0)), ValidationError);
}

TEST_CASE("orthogonal geometry puts every state at ninety degrees") {
    Rng rng(23);
    const Stokes axis = random_unit_stokes(rng);
    const FourStateCircle circle(axis, 0.4); // circle plane perpendicular to the axis
    const double delta_theta = 1.0;
    const ErrorBudget budget =
        protocol_error_budget(ProtocolSpec::bb84(), circle, axis, delta_theta);
    REQUIRE(budget.per_state.size() == 4);
    const double p_max = closed_form_infidelity(ArcParams(delta_theta, kPi / 2));
    CHECK(p_max == doctest::Approx(0.020574461395797).epsilon(1e-12));
    for (double p : budget.per_state) {
        CHECK(p == doctest::Approx(p_max).epsilon(1e-12));
    }
    CHECK(budget.per_basis[0] == doctest::Approx(p_max).epsilon(1e-12));
    CHECK(budget.per_basis[1] == doctest::Approx(p_max).epsilon(1e-12));
    CHECK(budget.weighted_average == doctest::Approx(p_max).epsilon(1e-12));
}

TEST_CASE("aligning one basis with the PSPs halves the weighted error") {
    Rng rng(31);
    const double delta_theta = 1.3;
    const double p_max = closed_form_infidelity(ArcParams(delta_theta, kPi / 2));
    for (int trial = 0; trial < 10; ++trial) {
        const Stokes axis = random_unit_stokes(rng);

        const FourStateCircle aligned = circle_through_axis(axis, 0.0);
        const ErrorBudget a =
            protocol_error_budget(ProtocolSpec::bb84(), aligned, axis, delta_theta);
        CHECK(a.per_state[0] < 1e-14);
        CHECK(a.per_state[2] < 1e-14);
        CHECK(a.per_state[1] == doctest::Approx(p_max).epsilon(1e-10));
        CHECK(a.per_state[3] == doctest::Approx(p_max).epsilon(1e-10));
        CHECK(a.per_basis[0] < 1e-14);
        CHECK(a.weighted_average == doctest::Approx(p_max / 2).epsilon(1e-10));

        const FourStateCircle symmetric = circle_through_axis(axis, kPi / 4);
        const ErrorBudget s =
            protocol_error_budget(ProtocolSpec::bb84(), symmetric, axis, delta_theta);
        for (double p : s.per_state) {
            // sin(pi/4)^2 = 1/2, so every state carries half the maximum
            CHECK(p == doctest::Approx(p_max / 2).epsilon(1e-10));
        }
        CHECK(s.weighted_average == doctest::Approx(p_max / 2).epsilon(1e-10));
        CHECK(s.weighted_average == doctest::Approx(a.weighted_average).epsilon(1e-10));
    }
}

TEST_CASE("budget rejects mismatched protocol kinds") {
    const Stokes axis(0, 0, 1);
    const FourStateCircle circle(axis, 0.0);
    const StokesTriad triad = StokesTriad::identity();
    CHECK_THROWS_AS(
        protocol_error_budget(ProtocolSpec::six_state(), circle, axis, 1.0), ValidationError);
    CHECK_THROWS_AS(
        protocol_error_budget(ProtocolSpec::bb84(), triad, axis, 1.0), ValidationError);
    CHECK_THROWS_AS(optimize_orientation(ProtocolSpec::six_state(), axis, 1.0,
                                         OrientationObjective::min_weighted()),
                    ValidationError);
}

TEST_CASE("six-state average hits the closed form for every orientation") {
    const double anchor = six_state_average(StokesTriad::identity(), Stokes(0, 0, 1), 1.0);
    CHECK(anchor == doctest::Approx(0.013716307597198).epsilon(1e-12));

    Rng rng(47);
    const Stokes axis = random_unit_stokes(rng);
    double lo = 1.0, hi = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const StokesTriad triad = StokesTriad::rotated(random_rotation(rng));
        const double value = six_state_average(triad, axis, 1.0);
        lo = std::min(lo, value);
        hi = std::max(hi, value);
    }
    CHECK(hi - lo < 1e-12); // orientation independent

    for (double delta_theta : {0.3, 1.7, 2.9}) {
        const double expected = (1.0 - sinc(delta_theta / 2.0)) / 3.0;
        const StokesTriad triad = StokesTriad::rotated(random_rotation(rng));
        CHECK(six_state_average(triad, axis, delta_theta) ==
              doctest::Approx(expected).epsilon(1e-12));
        // equal basis probabilities make the weighted budget the plain mean
        const ErrorBudget budget =
            protocol_error_budget(ProtocolSpec::six_state(), triad, axis, delta_theta);
        CHECK(budget.weighted_average == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("balance objective sets the exact per-basis ratio") {
    Rng rng(59);
    const Stokes axis = random_unit_stokes(rng);
    const double delta_theta = 0.9;
    for (double ratio : {0.1, 1.0, 10.0}) {
        const OrientationResult result = optimize_orientation(
            ProtocolSpec::bb84(), axis, delta_theta, OrientationObjective::balance_ratio(ratio));
        CHECK(result.alpha_rad == doctest::Approx(std::atan(std::sqrt(ratio))).epsilon(1e-12));
        CHECK(result.budget.per_basis[0] / result.budget.per_basis[1] ==
              doctest::Approx(ratio).epsilon(1e-9));
        // the circle plane contains the axis, state 0 sits alpha away from it
        CHECK(std::abs(result.circle.normal().dot(axis)) < 1e-9);
        CHECK(state_pmd_angles(result.circle, axis)[0] ==
              doctest::Approx(result.alpha_rad).epsilon(1e-9));
    }
    CHECK_NOTHROW(optimize_orientation(ProtocolSpec::bb84(), axis, delta_theta,
                                       OrientationObjective::balance_ratio(0.0)));
    CHECK_THROWS_AS(OrientationObjective::balance_ratio(-1.0), ValidationError);
}

TEST_CASE("min-weighted objective parks the likelier basis on the PSPs") {
    const Stokes axis = Stokes(0.6, -0.64, 0.48).normalized();
    const double delta_theta = 1.1;
    const double p_max = closed_form_infidelity(ArcParams(delta_theta, kPi / 2));

    const OrientationResult mostly_z = optimize_orientation(
        ProtocolSpec::bb84(0.9), axis, delta_theta, OrientationObjective::min_weighted());
    CHECK(mostly_z.alpha_rad == 0.0);
    CHECK(mostly_z.budget.per_basis[0] < 1e-14);
    CHECK(mostly_z.budget.weighted_average == doctest::Approx(0.1 * p_max).epsilon(1e-9));

    const OrientationResult mostly_x = optimize_orientation(
        ProtocolSpec::bb84(0.3), axis, delta_theta, OrientationObjective::min_weighted());
    CHECK(mostly_x.alpha_rad == doctest::Approx(kPi / 2).epsilon(1e-15));
    CHECK(mostly_x.budget.per_basis[1] < 1e-14);
    CHECK(mostly_x.budget.weighted_average == doctest::Approx(0.3 * p_max).epsilon(1e-9));

    const OrientationResult tie = optimize_orientation(
        ProtocolSpec::bb84(0.5), axis, delta_theta, OrientationObjective::min_weighted());
    CHECK(tie.alpha_rad == 0.0);
}

TEST_CASE("receiver alignment is exact at the alignment wavelength") {
    const FiberRealization fiber = synthesize_fiber(FiberSpec{30.0, 0.05, 40, 11});
    const double lambda0 = 1310.0;
    const AlignmentUnitaries alignment = alignment_unitaries(fiber, lambda0);
    CHECK((alignment.u1 * alignment.u1.adjoint()).isApprox(Eigen::Matrix2cd::Identity(), 1e-12));
    CHECK(aligned_channel(fiber, alignment, lambda0).isApprox(Eigen::Matrix2cd::Identity(), 1e-10));

    const FiberRealization no_dgd({Segment{Stokes(0, 0, 1), 0.0}});
    CHECK_THROWS_AS(alignment_unitaries(no_dgd, lambda0), ValidationError);
    CHECK_THROWS_AS(alignment_unitaries(fiber, lambda0, 0.0), ValidationError);
    CHECK_THROWS_AS(alignment_unitaries(fiber, 0.01, 0.05), ValidationError);
}

TEST_CASE("alignment pins the PSP poles across the band on a first-order fiber") {
    const Stokes axis = Stokes(0.48, 0.6, -0.64).normalized();
    const FiberRealization fiber({Segment{axis, 0.3}});
    const AlignmentUnitaries alignment = alignment_unitaries(fiber, 1310.0);
    const SpectralGrid grid(1300.0, 1320.0, 41);

    const Eigen::Vector2cd h(1.0, 0.0), v(0.0, 1.0);
    const Eigen::Vector2cd d = Eigen::Vector2cd(1.0, 1.0) / std::sqrt(2.0);
    double min_d_fidelity = 1.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Eigen::Matrix2cd c = aligned_channel(fiber, alignment, grid[i]);
        CHECK(std::norm(h.dot(c * h)) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(std::norm(v.dot(c * v)) == doctest::Approx(1.0).epsilon(1e-9));
        min_d_fidelity = std::min(min_d_fidelity, std::norm(d.dot(c * d)));
    }
    // the equatorial state is not protected and precesses across the band
    CHECK(min_d_fidelity < 0.9);
}

TEST_CASE("higher-order report is null for a first-order fiber") {
    const FiberRealization fiber({Segment{Stokes(0, 1, 0), 0.4}});
    const SpectralGrid grid(1300.0, 1320.0, 41);
    const HigherOrderReport report = higher_order_report(fiber, BandSpec(1310.0, 10.0), grid);
    CHECK_FALSE(report.delta_lambda0_nm.has_value());
    CHECK_FALSE(report.p_e_osc.has_value());
    CHECK(report.psp_arc_rad < 1e-12);
    CHECK(report.p_e_psp_two_channel < 1e-12);
}

TEST_CASE("higher-order report measures PSP wander on a concatenated fiber") {
    const FiberRealization fiber = synthesize_fiber(FiberSpec{30.0, 0.05, 60, 7});
    const SpectralGrid grid(1260.0, 1360.0, 401);
    const HigherOrderReport report = higher_order_report(fiber, BandSpec(1310.0, 20.0), grid);

    CHECK(report.psp_arc_rad > 0.01);
    CHECK(report.p_e_psp_two_channel ==
          doctest::Approx(2.0 * report.psp_arc_rad * report.psp_arc_rad / 48.0).epsilon(1e-12));
    REQUIRE(report.delta_lambda0_nm.has_value());
    CHECK(*report.delta_lambda0_nm > 1.0);
    CHECK(*report.delta_lambda0_nm < 60.0);
    REQUIRE(report.p_e_osc.has_value());
    CHECK(*report.p_e_osc > 0.0);

    CHECK_THROWS_AS(higher_order_report(fiber, BandSpec(1359.0, 10.0), grid), ValidationError);
    const SpectralGrid coarse(1300.0, 1320.0, 41);
    CHECK_THROWS_AS(higher_order_report(fiber, BandSpec(1310.25, 0.1), coarse), ValidationError);
}
