#include "pmdtk/spectral.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "pmdtk/errors.hpp"

namespace pmdtk {

namespace {
constexpr double kUniformTolNm = 1e-9;
}

double omega_rad_per_ps(double wavelength_nm) {
    if (wavelength_nm <= 0.0) {
        throw ValidationError("wavelength must be positive, got " + std::to_string(wavelength_nm) +
                              " nm");
    }
    return 2.0 * std::numbers::pi * kSpeedOfLightNmPerPs / wavelength_nm;
}

SpectralGrid::SpectralGrid(std::vector<double> pts) : points_(std::move(pts)) {
    if (points_.size() < 2) {
        throw ValidationError("spectral grid needs at least 2 points");
    }
    step_ = points_[1] - points_[0];
    if (step_ <= 0.0) {
        throw ValidationError("spectral grid must be strictly increasing");
    }
    for (std::size_t i = 1; i < points_.size(); ++i) {
        const double d = points_[i] - points_[i - 1];
        if (std::abs(d - step_) > kUniformTolNm) {
            throw ValidationError("spectral grid step is not uniform near " +
                                  std::to_string(points_[i]) + " nm");
        }
    }
    if (points_.front() <= 0.0) {
        throw ValidationError("spectral grid wavelengths must be positive");
    }
}

SpectralGrid::SpectralGrid(double start_nm, double stop_nm, std::size_t n_points)
    : SpectralGrid([&] {
          if (n_points < 2) {
              throw ValidationError("spectral grid needs at least 2 points");
          }
          if (!(stop_nm > start_nm)) {
              throw ValidationError("spectral grid range must be increasing");
          }
          std::vector<double> pts(n_points);
          const double step = (stop_nm - start_nm) / static_cast<double>(n_points - 1);
          for (std::size_t i = 0; i < n_points; ++i) {
              pts[i] = start_nm + static_cast<double>(i) * step;
          }
          pts.back() = stop_nm;
          return pts;
      }()) {}

SpectralGrid SpectralGrid::from_points(std::vector<double> wavelengths_nm) {
    return SpectralGrid(std::move(wavelengths_nm));
}

SpectralGrid SpectralGrid::from_step(double start_nm, double stop_nm, double step_nm) {
    if (step_nm <= 0.0) {
        throw ValidationError("spectral grid step must be positive");
    }
    const double n_exact = (stop_nm - start_nm) / step_nm;
    const auto n_steps = static_cast<long long>(std::llround(n_exact));
    if (n_steps < 1 || std::abs(n_exact - static_cast<double>(n_steps)) > 1e-6) {
        throw ValidationError("grid range is not an integer number of steps");
    }
    std::vector<double> pts(static_cast<std::size_t>(n_steps) + 1);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        pts[i] = start_nm + static_cast<double>(i) * step_nm;
    }
    pts.back() = stop_nm;
    return SpectralGrid(std::move(pts));
}

BandSpec::BandSpec(double center, double width) : center_nm(center), width_nm(width) {
    if (!(center_nm > 0.0)) {
        throw ValidationError("band center must be positive");
    }
    if (width_nm < 0.0 || width_nm >= center_nm) {
        throw ValidationError("band width must be in [0, center)");
    }
}

double delta_omega(const BandSpec& band) {
    return 2.0 * std::numbers::pi * kSpeedOfLightMPerS * (band.width_nm * 1e-9) /
           ((band.center_nm * 1e-9) * (band.center_nm * 1e-9));
}

double arc_angle(double dgd_ps, const BandSpec& band) {
    if (dgd_ps < 0.0) {
        throw ValidationError("DGD must be non-negative");
    }
    return dgd_ps * 1e-12 * delta_omega(band);
}

} // namespace pmdtk
