#include "pmdtk/polarization.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace pmdtk {

namespace {

constexpr double kConstructTol = 1e-9;

const Eigen::Matrix2cd& tau(int i) {
    // Stokes-adapted Pauli order: tau_1 = sigma_z, tau_2 = sigma_x,
    // tau_3 = sigma_y, so <j|tau_i|j> is the i-th Stokes component.
    static const std::array<Eigen::Matrix2cd, 3> mats = [] {
        std::array<Eigen::Matrix2cd, 3> m;
        const Complex i1(0.0, 1.0);
        m[0] << 1, 0, 0, -1;
        m[1] << 0, 1, 1, 0;
        m[2] << 0, -i1, i1, 0;
        return m;
    }();
    return mats[i];
}

} // namespace

void require_unit(const Stokes& v, double tol, const std::string& what) {
    if (std::abs(v.norm() - 1.0) > tol) {
        throw ValidationError(what + " must be a unit vector (|v| = " + std::to_string(v.norm()) +
                              ")");
    }
}

JonesVector::JonesVector(Complex c_h, Complex c_v) {
    v_ << c_h, c_v;
    const double norm = v_.norm();
    if (std::abs(norm - 1.0) > kConstructTol) {
        throw ValidationError("Jones vector must be normalized (norm = " + std::to_string(norm) +
                              ")");
    }
    // Canonical global phase: first component with magnitude > 1e-9 made
    // real and non-negative.
    for (int i = 0; i < 2; ++i) {
        const double mag = std::abs(v_(i));
        if (mag > 1e-9) {
            v_ *= std::conj(v_(i)) / mag;
            break;
        }
    }
    v_ /= v_.norm();
}

JonesVector JonesVector::from_amplitudes(Complex c_h, Complex c_v) {
    Eigen::Vector2cd raw;
    raw << c_h, c_v;
    const double norm = raw.norm();
    if (norm < 1e-15) {
        throw ValidationError("cannot normalize a zero Jones vector");
    }
    return JonesVector(c_h / norm, c_v / norm);
}

JonesVector jones_h() { return JonesVector(1.0, 0.0); }
JonesVector jones_v() { return JonesVector(0.0, 1.0); }

DensityMatrix::DensityMatrix(const Eigen::Matrix2cd& m) : m_(m) {
    if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > kConstructTol) {
        throw ValidationError("density matrix must be Hermitian");
    }
    if (std::abs(m_.trace().real() - 1.0) > kConstructTol ||
        std::abs(m_.trace().imag()) > kConstructTol) {
        throw ValidationError("density matrix must have unit trace");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(m_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -kConstructTol) {
        throw ValidationError("density matrix must be positive semidefinite");
    }
}

DensityMatrix DensityMatrix::pure(const JonesVector& j) {
    return DensityMatrix(j.amplitudes() * j.amplitudes().adjoint());
}

Stokes DensityMatrix::bloch() const {
    Stokes r;
    for (int i = 0; i < 3; ++i) {
        r(i) = (tau(i) * m_).trace().real();
    }
    return r;
}

PolRotation::PolRotation(const Eigen::Matrix3d& m) : m_(m) {
    if ((m_.transpose() * m_ - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-10) {
        throw ValidationError("rotation matrix must be orthogonal");
    }
    if (std::abs(m_.determinant() - 1.0) > 1e-10) {
        throw ValidationError("rotation matrix must have determinant +1");
    }
}

PolRotation PolRotation::about(const Stokes& axis, double angle_rad) {
    require_unit(axis, 1e-6, "rotation axis");
    const Stokes a = axis.normalized();
    Eigen::Matrix3d cross;
    cross << 0, -a.z(), a.y(), a.z(), 0, -a.x(), -a.y(), a.x(), 0;
    const double c = std::cos(angle_rad);
    const double s = std::sin(angle_rad);
    Eigen::Matrix3d m =
        c * Eigen::Matrix3d::Identity() + s * cross + (1.0 - c) * (a * a.transpose());
    return PolRotation(m);
}

Stokes jones_to_stokes(const JonesVector& j) {
    const Complex hv = std::conj(j.h()) * j.v();
    return Stokes(std::norm(j.h()) - std::norm(j.v()), 2.0 * hv.real(), 2.0 * hv.imag());
}

JonesVector stokes_to_jones(const Stokes& s) {
    require_unit(s, 1e-6, "Stokes vector");
    const Stokes u = s.normalized();
    const double theta = std::acos(std::clamp(u.x(), -1.0, 1.0));
    const double phase = std::atan2(u.z(), u.y());
    const Complex c_v = std::polar(std::sin(theta / 2.0), phase);
    return JonesVector::from_amplitudes(std::cos(theta / 2.0), c_v);
}

double overlap_prob(const JonesVector& a, const JonesVector& b) {
    const Complex ip = (a.amplitudes().adjoint() * b.amplitudes())(0);
    return std::clamp(std::norm(ip), 0.0, 1.0);
}

double fidelity_pure_mixed(const JonesVector& s0, const DensityMatrix& rho) {
    const Complex val = (s0.amplitudes().adjoint() * rho.matrix() * s0.amplitudes())(0);
    return std::clamp(val.real(), 0.0, 1.0);
}

Stokes rotate_stokes(const Stokes& s, const Stokes& axis, double angle_rad) {
    require_unit(axis, 1e-6, "rotation axis");
    const Stokes a = axis.normalized();
    const double c = std::cos(angle_rad);
    const double sn = std::sin(angle_rad);
    return s * c + a.cross(s) * sn + a * (a.dot(s)) * (1.0 - c);
}

PolRotation rotation_from_unitary(const Eigen::Matrix2cd& u) {
    if ((u.adjoint() * u - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff() > kConstructTol) {
        throw ValidationError("rotation_from_unitary requires a unitary matrix");
    }
    Eigen::Matrix3d r;
    for (int i = 0; i < 3; ++i) {
        for (int k = 0; k < 3; ++k) {
            r(i, k) = 0.5 * (tau(i) * u * tau(k) * u.adjoint()).trace().real();
        }
    }
    return PolRotation(r);
}

Eigen::Matrix2cd unitary_about(const Stokes& axis, double angle_rad) {
    require_unit(axis, 1e-6, "rotation axis");
    const Stokes a = axis.normalized();
    const Complex i1(0.0, 1.0);
    Eigen::Matrix2cd n = a.x() * tau(0) + a.y() * tau(1) + a.z() * tau(2);
    return std::cos(angle_rad / 2.0) * Eigen::Matrix2cd::Identity() -
           i1 * std::sin(angle_rad / 2.0) * n;
}

AngleAxis rotation_angle_axis(const PolRotation& r) {
    const Eigen::Matrix3d& m = r.matrix();
    const double angle = std::acos(std::clamp((m.trace() - 1.0) / 2.0, -1.0, 1.0));
    if (angle < 1e-9) {
        return {angle, Stokes(1, 0, 0), false};
    }
    // sin(angle) * axis from the antisymmetric part.
    Stokes anti(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
    if (anti.norm() > 1e-6) {
        return {angle, Stokes(anti.normalized()), true};
    }
    // Near angle = pi the antisymmetric part vanishes; recover the axis from
    // the symmetric part, (1 - cos) * axis axis^T, and fix the sign with the
    // antisymmetric remnant (either sign is valid at exactly pi).
    const Eigen::Matrix3d outer =
        (m + m.transpose()) / 2.0 - std::cos(angle) * Eigen::Matrix3d::Identity();
    int col = 0;
    outer.colwise().norm().maxCoeff(&col);
    Stokes axis = outer.col(col).normalized();
    if (axis.dot(anti) < 0.0) {
        axis = -axis;
    }
    return {angle, axis, true};
}

Stokes state_from_label(std::string_view label) {
    if (label == "H") return Stokes(1, 0, 0);
    if (label == "V") return Stokes(-1, 0, 0);
    if (label == "D") return Stokes(0, 1, 0);
    if (label == "A") return Stokes(0, -1, 0);
    if (label == "R") return Stokes(0, 0, 1);
    if (label == "L") return Stokes(0, 0, -1);
    throw ValidationError("unknown state label '" + std::string(label) +
                          "' (expected H, V, D, A, R or L)");
}

bool is_state_label(std::string_view label) {
    return label == "H" || label == "V" || label == "D" || label == "A" || label == "R" ||
           label == "L";
}

Stokes random_unit_stokes(Rng& rng) {
    const double z = 2.0 * rng.uniform01() - 1.0;
    const double phi = 2.0 * std::numbers::pi * rng.uniform01();
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return Stokes(r * std::cos(phi), r * std::sin(phi), z);
}

} // namespace pmdtk
