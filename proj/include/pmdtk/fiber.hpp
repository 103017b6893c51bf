#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "pmdtk/polarization.hpp"
#include "pmdtk/spectral.hpp"

namespace pmdtk {

/// Recipe for a synthetic fiber: length, PMD coefficient (ps/sqrt(km)),
/// number of birefringent segments, RNG seed.
struct FiberSpec {
    double length_km = 30.0;
    double pmd_coeff = 0.05;
    int n_segments = 200;
    std::uint64_t seed = 42;
};

struct Segment {
    Stokes axis;     // unit Stokes-space birefringence axis
    double delay_ps; // >= 0
};

/// An emulated fiber: ordered birefringent waveplates. Immutable after
/// synthesis; every operation below is a pure function of it.
class FiberRealization {
public:
    explicit FiberRealization(std::vector<Segment> segments);

    std::span<const Segment> segments() const { return segments_; }
    std::size_t size() const { return segments_.size(); }

    /// Sum of |delay| over segments; upper bound for the DGD at any wavelength.
    double total_delay_ps() const;

    void save_json(const std::filesystem::path& path) const;
    static FiberRealization load_json(const std::filesystem::path& path);

private:
    std::vector<Segment> segments_;
};

/// Draw a fiber realization: i.i.d. uniform random axes and equal per-segment
/// delays sqrt(3 pi / 8) * pmd_coeff * sqrt(L) / sqrt(N), which makes the
/// ensemble-mean DGD equal pmd_coeff * sqrt(L) (Maxwellian mean/rms ratio).
/// Deterministic for a given spec (including seed).
FiberRealization synthesize_fiber(const FiberSpec& spec);

/// Frequency-dependent Jones transfer matrix: ordered product over segments
/// of exp(-i w delay_k / 2 (axis_k . tau)).
Eigen::Matrix2cd transfer_unitary(const FiberRealization& fiber, double wavelength_nm);

/// Output polarization samples across a grid for one launched state.
struct Trajectory {
    std::vector<double> wavelengths_nm;
    std::vector<Stokes> states;
    /// True when some adjacent pair is separated by >= pi/4 on the sphere:
    /// the grid under-samples the arc and downstream quadrature may alias.
    bool undersampled = false;
};

Trajectory propagate_trajectory(const FiberRealization& fiber, const JonesVector& input,
                                const SpectralGrid& grid);

/// PMD vector Omega = dgd * psp_axis at one wavelength.
struct PMDVectorSample {
    double wavelength_nm;
    Stokes omega_vec_ps;

    double dgd_ps() const { return omega_vec_ps.norm(); }
};

/// Finite-difference PMD vector at each interior point of `wavelengths`:
/// the Stokes rotation between the two neighbouring samples gives
/// |Omega| = angle/|d omega| and the rotation axis gives the PSP.
/// `wavelengths` must be uniformly spaced and monotonic; a descending span is
/// accepted and flips the reported axis sign (the rotation sense reverses
/// with the traversal direction) while |Omega| is unchanged.
/// Throws when a per-step rotation angle reaches pi (aliasing guard),
/// naming the offending wavelength.
std::vector<PMDVectorSample> pmd_vector_spectrum(const FiberRealization& fiber,
                                                 std::span<const double> wavelengths_nm);
std::vector<PMDVectorSample> pmd_vector_spectrum(const FiberRealization& fiber,
                                                 const SpectralGrid& grid);

struct DGDSample {
    double wavelength_nm;
    double dgd_ps;
};

/// |Omega|(lambda) from pmd_vector_spectrum.
std::vector<DGDSample> dgd_spectrum(const FiberRealization& fiber, const SpectralGrid& grid);

} // namespace pmdtk
