#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <string_view>

#include "pmdtk/errors.hpp"
#include "pmdtk/rng.hpp"

namespace pmdtk {

using Complex = std::complex<double>;

/// Stokes-space 3-vector (s1, s2, s3). Unit norm for pure states;
/// also used for rotation axes and PMD vectors (then the norm carries units).
using Stokes = Eigen::Vector3d;

/// Convention, fixed throughout the toolkit:
///   s1 = |c_h|^2 - |c_v|^2,  s2 = 2 Re(c_h* c_v),  s3 = 2 Im(c_h* c_v)
/// so H=(1,0,0), V=(-1,0,0), D=(0,1,0), A=(0,-1,0), R=(0,0,1), L=(0,0,-1),
/// with right-circular at the +s3 pole.

/// Normalized two-component Jones vector with a canonical global phase:
/// the first component of magnitude > 1e-9 is real and non-negative.
class JonesVector {
public:
    /// Validates |c_h|^2+|c_v|^2 = 1 within 1e-9, then canonicalizes the phase.
    JonesVector(Complex c_h, Complex c_v);

    Complex h() const { return v_(0); }
    Complex v() const { return v_(1); }
    const Eigen::Vector2cd& amplitudes() const { return v_; }

    /// Normalizes an arbitrary non-zero amplitude pair, then canonicalizes.
    static JonesVector from_amplitudes(Complex c_h, Complex c_v);

private:
    Eigen::Vector2cd v_;
};

/// 2x2 density matrix: Hermitian, trace 1, positive semidefinite
/// (all checked on construction, tolerance 1e-9).
class DensityMatrix {
public:
    explicit DensityMatrix(const Eigen::Matrix2cd& m);

    static DensityMatrix pure(const JonesVector& j);

    const Eigen::Matrix2cd& matrix() const { return m_; }

    /// Bloch/Stokes vector of the state; |r| < 1 for mixed states.
    Stokes bloch() const;

private:
    Eigen::Matrix2cd m_;
};

/// Proper rotation of Stokes space: orthogonal with det +1 (checked at 1e-10
/// on construction, matching what Gram-Schmidt frames and SU(2) images give).
class PolRotation {
public:
    explicit PolRotation(const Eigen::Matrix3d& m);

    static PolRotation identity() { return PolRotation(Eigen::Matrix3d::Identity()); }

    /// Right-handed rotation by `angle` about the unit vector `axis`.
    static PolRotation about(const Stokes& axis, double angle_rad);

    const Eigen::Matrix3d& matrix() const { return m_; }
    Stokes apply(const Stokes& s) const { return m_ * s; }

    PolRotation transposed() const { return PolRotation(m_.transpose()); }
    friend PolRotation operator*(const PolRotation& a, const PolRotation& b) {
        return PolRotation(a.m_ * b.m_);
    }

private:
    Eigen::Matrix3d m_;
};

JonesVector jones_h();
JonesVector jones_v();

/// Map a normalized Jones vector to its unit Stokes vector.
Stokes jones_to_stokes(const JonesVector& j);

/// Inverse map; `s` must be unit within 1e-6. Returns the canonical Jones
/// representative, so jones_to_stokes(stokes_to_jones(s)) = s within 1e-10.
JonesVector stokes_to_jones(const Stokes& s);

/// |<a|b>|^2. Equals (1 + s_a . s_b)/2.
double overlap_prob(const JonesVector& a, const JonesVector& b);

/// <s0| rho |s0>; the fidelity between a pure state and rho.
double fidelity_pure_mixed(const JonesVector& s0, const DensityMatrix& rho);

/// Rodrigues rotation of `s` by `angle` about the unit vector `axis`.
Stokes rotate_stokes(const Stokes& s, const Stokes& axis, double angle_rad);

/// Adjoint map SU(2) -> SO(3): R_ik = Re[ tr(tau_i U tau_k U^dag) ] / 2,
/// where (tau_1, tau_2, tau_3) = (sigma_z, sigma_x, sigma_y) matches the
/// Stokes component order above. Throws on non-unitary input (tol 1e-9).
PolRotation rotation_from_unitary(const Eigen::Matrix2cd& u);

/// Unitary consistent with rotation_from_unitary: exp(-i angle/2 (axis . tau))
/// induces the Stokes rotation PolRotation::about(axis, angle).
Eigen::Matrix2cd unitary_about(const Stokes& axis, double angle_rad);

/// Angle in [0, pi] and unit axis of a rotation. The axis sign makes the
/// angle positive; below angle 1e-9 the axis is reported as (1,0,0) and
/// `axis_defined` is false.
struct AngleAxis {
    double angle_rad;
    Stokes axis;
    bool axis_defined;
};
AngleAxis rotation_angle_axis(const PolRotation& r);

/// Canonical six polarization labels: H, V, D, A, R, L.
Stokes state_from_label(std::string_view label);
bool is_state_label(std::string_view label);

/// Uniform random point on the Poincare sphere.
Stokes random_unit_stokes(Rng& rng);

/// Throws ValidationError when |v| differs from 1 by more than tol.
void require_unit(const Stokes& v, double tol, const std::string& what);

} // namespace pmdtk
