#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pmdtk {

/// Vacuum speed of light, exact.
inline constexpr double kSpeedOfLightMPerS = 299792458.0;
inline constexpr double kSpeedOfLightNmPerPs = 299792.458;

/// Angular optical frequency in rad/ps for a vacuum wavelength in nm.
/// rad/ps pairs directly with delays in ps: angle = dgd_ps * domega_rad_per_ps.
double omega_rad_per_ps(double wavelength_nm);

/// Uniform, strictly increasing wavelength grid (nm).
/// Uniformity within 1e-9 nm is required by all downstream quadrature.
class SpectralGrid {
public:
    /// n_points samples from start_nm to stop_nm inclusive.
    SpectralGrid(double start_nm, double stop_nm, std::size_t n_points);

    /// Validates monotonicity and step uniformity of explicit points.
    static SpectralGrid from_points(std::vector<double> wavelengths_nm);

    /// Convenience: closed range with the given step; stop is included when
    /// it lands on the grid within 1e-9 nm.
    static SpectralGrid from_step(double start_nm, double stop_nm, double step_nm);

    std::size_t size() const { return points_.size(); }
    double operator[](std::size_t i) const { return points_[i]; }
    double front() const { return points_.front(); }
    double back() const { return points_.back(); }
    double step() const { return step_; }
    std::span<const double> points() const { return points_; }

private:
    explicit SpectralGrid(std::vector<double> pts);
    std::vector<double> points_;
    double step_ = 0.0;
};

/// Wavelength band: a filtering window centered on center_nm.
struct BandSpec {
    double center_nm;
    double width_nm;

    BandSpec(double center, double width);
};

/// First-order conversion of the band width to an angular-frequency width:
/// delta_omega = 2 pi c width / center^2, in rad/s.
double delta_omega(const BandSpec& band);

/// Rotation-angle law: the Poincare-sphere arc angle swept across the band
/// by a channel with the given DGD (ps).
double arc_angle(double dgd_ps, const BandSpec& band);

} // namespace pmdtk
