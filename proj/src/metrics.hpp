#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "volgrid.hpp"

namespace voxfuse {

// --- scalar structure metrics -----------------------------------------------

// count(label == phase) / total sites.
double volume_fraction(const PhaseVolume& v, int phase);
double volume_fraction(const PhaseImage& img, int phase);

// 6-connected adjacent pairs with labels {a, b} divided by the number of
// internal adjacent pairs: (nx-1)*ny*nz + nx*(ny-1)*nz + nx*ny*(nz-1).
double interphase_surface_area(const PhaseVolume& v, int phase_a, int phase_b);
// 2D analogue over (nx-1)*ny + nx*(ny-1) internal pairs.
double interphase_surface_area(const PhaseImage& img, int phase_a, int phase_b);

// Fraction of internal voxel edges whose four surrounding voxels carry all
// three phases. Defined only for exactly three phases.
double tpb_density(const PhaseVolume& v);

// --- steady-state diffusion -------------------------------------------------

struct TransportOptions {
    double omega = 1.9;                  // successive over-relaxation factor
    double rel_tol = 1e-5;               // relative flux change between checks
    int64_t max_sweeps = 1000000;        // hard iteration cap
    int64_t check_interval = 50;         // sweeps between convergence checks
    double conservation_tol = 0.01;      // max plane-flux spread at convergence
};

struct TransportResult {
    bool percolating = false;
    bool converged = false;
    double efficiency = 0.0;             // D_eff/D_bulk = VF / tortuosity, in [0, VF]
    double tortuosity = 0.0;             // VF / efficiency; 0 when non-percolating
    double volume_fraction = 0.0;
    double flux = 0.0;                   // total steady-state flux
    double plane_flux_spread = 0.0;      // max relative deviation across planes
    int64_t sweeps = 0;
};

// Unit-concentration drop across the two faces normal to `axis`; unit
// conductance per internal same-phase face, double conductance for the
// half-links onto the boundary reservoirs (so a fully dense volume yields
// efficiency exactly 1).
TransportResult transport_solve(const PhaseVolume& v, int phase, int axis,
                                const TransportOptions& opt = {});
double transport_efficiency(const PhaseVolume& v, int phase, int axis,
                            const TransportOptions& opt = {});

// --- spatial statistics -------------------------------------------------------

// S[d] = P(label(x) == a and label(x + d*axis) == b) over sites where both
// ends lie inside the volume, for d = 0..dmax.
std::vector<double> two_point_correlation(const PhaseVolume& v, int phase_a, int phase_b,
                                          int axis, int64_t dmax = 80);

// P(voxel of `phase` belongs to a maximal axis-aligned run of length d), for
// d = 1..dmax (index 0 of the result is d=1). Runs touching the volume
// boundary are censored: excluded from the tally unless include_censored.
// The denominator is the total count of `phase` voxels, so the distribution
// sums to <= 1.
std::vector<double> chord_length_distribution(const PhaseVolume& v, int phase, int axis,
                                              int64_t dmax = 80, bool include_censored = false);

// --- sampled distributions ----------------------------------------------------

struct Distribution {
    std::vector<double> samples;
    double mean = 0.0;
    double stddev = 0.0; // sample standard deviation (n-1), 0 for n < 2

    static Distribution from_samples(std::vector<double> samples);
    void check_consistent(double tol = 1e-12) const;
};

struct MetricSpec {
    std::string name;
    std::function<double(const PhaseVolume&)> evaluate;
};

// Evaluates `metric` on n uniformly placed size^3 cubes. Cube corners derive
// from (seed, cube index) alone, so results are independent of evaluation
// order or worker count.
Distribution subvolume_distribution(const PhaseVolume& v, const MetricSpec& metric,
                                    int64_t n = 256, int64_t size = 64, uint64_t seed = 0);

// --- spectral profile ---------------------------------------------------------

// Ring-averaged log10 magnitude of the centered 2D spectrum, ring radius
// 0..hypot(nx/2, ny/2) in integer steps. Grey input: one profile. Label
// image: mean of per-phase indicator profiles.
std::vector<double> radial_fft_profile(const std::vector<double>& grey,
                                       std::array<int64_t, 2> dims);
std::vector<double> radial_fft_profile(const PhaseImage& img);

// Mean of the profile over ring indices in [lo_frac, hi_frac] of the ring range.
double profile_band_mean(const std::vector<double>& profile, double lo_frac, double hi_frac);

} // namespace voxfuse
