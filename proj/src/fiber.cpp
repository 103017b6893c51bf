#include "pmdtk/fiber.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include <json.hpp>

#include "pmdtk/io.hpp"

namespace pmdtk {

namespace {

void validate_spec(const FiberSpec& spec) {
    if (!(spec.length_km > 0.0)) {
        throw ValidationError("fiber length must be positive");
    }
    if (spec.pmd_coeff < 0.0) {
        throw ValidationError("PMD coefficient must be non-negative");
    }
    if (spec.n_segments < 1) {
        throw ValidationError("fiber needs at least one segment");
    }
}

// Applies exp(-i theta/2 (axis . tau)) to a Jones amplitude pair in place.
inline void apply_segment(Eigen::Vector2cd& v, const Stokes& a, double theta) {
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    // (axis . tau) in the (sigma_z, sigma_x, sigma_y) component order.
    const Complex m01(a.y(), -a.z());
    const Complex m10(a.y(), a.z());
    const Complex t0 = a.x() * v(0) + m01 * v(1);
    const Complex t1 = m10 * v(0) - a.x() * v(1);
    const Complex mi_s(0.0, -s);
    v(0) = c * v(0) + mi_s * t0;
    v(1) = c * v(1) + mi_s * t1;
}

Eigen::Vector2cd propagate_jones(const FiberRealization& fiber, double wavelength_nm,
                                 const Eigen::Vector2cd& input) {
    const double w = omega_rad_per_ps(wavelength_nm);
    Eigen::Vector2cd v = input;
    for (const Segment& seg : fiber.segments()) {
        apply_segment(v, seg.axis, w * seg.delay_ps);
    }
    return v;
}

Stokes stokes_of(const Eigen::Vector2cd& v) {
    const Complex hv = std::conj(v(0)) * v(1);
    return Stokes(std::norm(v(0)) - std::norm(v(1)), 2.0 * hv.real(), 2.0 * hv.imag());
}

} // namespace

FiberRealization::FiberRealization(std::vector<Segment> segments)
    : segments_(std::move(segments)) {
    if (segments_.empty()) {
        throw ValidationError("fiber needs at least one segment");
    }
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        Segment& seg = segments_[i];
        if (std::abs(seg.axis.norm() - 1.0) > 1e-6) {
            throw ValidationError("segment " + std::to_string(i) + " axis is not unit");
        }
        seg.axis.normalize();
        if (seg.delay_ps < 0.0) {
            throw ValidationError("segment " + std::to_string(i) + " has negative delay");
        }
    }
}

double FiberRealization::total_delay_ps() const {
    double sum = 0.0;
    for (const Segment& seg : segments_) {
        sum += seg.delay_ps;
    }
    return sum;
}

FiberRealization synthesize_fiber(const FiberSpec& spec) {
    validate_spec(spec);
    // Equal per-segment delay chosen so the ensemble-mean DGD over random
    // axis draws equals pmd_coeff * sqrt(L): the N-segment random walk has
    // rms sqrt(N) * delta, and Maxwellian mean/rms = sqrt(8 / (3 pi)).
    const double delay = std::sqrt(3.0 * std::numbers::pi / 8.0) * spec.pmd_coeff *
                         std::sqrt(spec.length_km / spec.n_segments);
    Rng rng(spec.seed);
    std::vector<Segment> segs;
    segs.reserve(static_cast<std::size_t>(spec.n_segments));
    for (int i = 0; i < spec.n_segments; ++i) {
        segs.push_back({random_unit_stokes(rng), delay});
    }
    return FiberRealization(std::move(segs));
}

Eigen::Matrix2cd transfer_unitary(const FiberRealization& fiber, double wavelength_nm) {
    const double w = omega_rad_per_ps(wavelength_nm);
    Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity();
    for (const Segment& seg : fiber.segments()) {
        u = unitary_about(seg.axis, w * seg.delay_ps) * u;
    }
    return u;
}

Trajectory propagate_trajectory(const FiberRealization& fiber, const JonesVector& input,
                                const SpectralGrid& grid) {
    Trajectory traj;
    traj.wavelengths_nm.assign(grid.points().begin(), grid.points().end());
    traj.states.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        traj.states.push_back(stokes_of(propagate_jones(fiber, grid[i], input.amplitudes())));
        if (i > 0) {
            const double dot =
                std::clamp(traj.states[i - 1].dot(traj.states[i]), -1.0, 1.0);
            if (std::acos(dot) >= std::numbers::pi / 4.0) {
                traj.undersampled = true;
            }
        }
    }
    return traj;
}

std::vector<PMDVectorSample> pmd_vector_spectrum(const FiberRealization& fiber,
                                                 std::span<const double> wavelengths_nm) {
    const std::size_t n = wavelengths_nm.size();
    if (n < 3) {
        throw ValidationError("PMD vector extraction needs at least 3 wavelengths");
    }
    const double step = wavelengths_nm[1] - wavelengths_nm[0];
    if (step == 0.0) {
        throw ValidationError("wavelength span must be strictly monotonic");
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (std::abs(wavelengths_nm[i] - wavelengths_nm[i - 1] - step) > 1e-9) {
            throw ValidationError("wavelength span must be uniform");
        }
    }

    std::vector<PolRotation> rotations;
    rotations.reserve(n);
    for (double lam : wavelengths_nm) {
        rotations.push_back(rotation_from_unitary(transfer_unitary(fiber, lam)));
    }

    // Central difference at every interior point. The step rotation is taken
    // from the later span sample to the earlier one; since optical frequency
    // and wavelength run in opposite directions, this makes the axis on an
    // ascending grid the rotation axis for increasing frequency — the usual
    // PMD-vector convention. A descending span flips the reported axis.
    std::vector<PMDVectorSample> out;
    out.reserve(n - 2);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const PolRotation r_step = rotations[i - 1] * rotations[i + 1].transposed();
        const AngleAxis aa = rotation_angle_axis(r_step);
        if (aa.angle_rad > std::numbers::pi - 1e-3) {
            throw ValidationError("grid too coarse at " + std::to_string(wavelengths_nm[i]) +
                                  " nm: finite-difference rotation angle approaches pi");
        }
        const double dw = std::abs(omega_rad_per_ps(wavelengths_nm[i - 1]) -
                                   omega_rad_per_ps(wavelengths_nm[i + 1]));
        const double dgd = aa.angle_rad / dw;
        out.push_back({wavelengths_nm[i], dgd * aa.axis});
    }
    return out;
}

std::vector<PMDVectorSample> pmd_vector_spectrum(const FiberRealization& fiber,
                                                 const SpectralGrid& grid) {
    return pmd_vector_spectrum(fiber, grid.points());
}

std::vector<DGDSample> dgd_spectrum(const FiberRealization& fiber, const SpectralGrid& grid) {
    std::vector<DGDSample> out;
    const auto samples = pmd_vector_spectrum(fiber, grid);
    out.reserve(samples.size());
    for (const PMDVectorSample& s : samples) {
        out.push_back({s.wavelength_nm, s.dgd_ps()});
    }
    return out;
}

void FiberRealization::save_json(const std::filesystem::path& path) const {
    nlohmann::json doc;
    doc["segments"] = nlohmann::json::array();
    for (const Segment& seg : segments_) {
        doc["segments"].push_back(
            {{"axis", {seg.axis.x(), seg.axis.y(), seg.axis.z()}}, {"delay_ps", seg.delay_ps}});
    }
    atomic_write_text(path, doc.dump(2) + "\n");
}

FiberRealization FiberRealization::load_json(const std::filesystem::path& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("malformed fiber JSON in " + path.string() + ": " + e.what());
    }
    if (!doc.contains("segments") || !doc["segments"].is_array()) {
        throw ValidationError("fiber JSON must contain a \"segments\" array");
    }
    std::vector<Segment> segs;
    for (const auto& item : doc["segments"]) {
        if (!item.contains("axis") || !item["axis"].is_array() || item["axis"].size() != 3 ||
            !item.contains("delay_ps")) {
            throw ValidationError("fiber segment needs \"axis\" [x,y,z] and \"delay_ps\"");
        }
        Segment seg;
        seg.axis = Stokes(item["axis"][0].get<double>(), item["axis"][1].get<double>(),
                          item["axis"][2].get<double>());
        seg.delay_ps = item["delay_ps"].get<double>();
        segs.push_back(seg);
    }
    return FiberRealization(std::move(segs));
}

} // namespace pmdtk
