#pragma once

// Deliberately naive reference implementations of the structure metrics,
// written straight off the documented definitions and kept independent of
// the engine's code paths. The engine must agree with these exactly
// (identical integer counts, hence identical quotients).

#include <cstdint>
#include <vector>

#include "volgrid.hpp"

namespace voxfuse::oracle {

double volume_fraction(const PhaseVolume& v, int phase);

// {a,b}-labelled 6-neighbor pairs over all internal adjacent pairs.
double surface_area(const PhaseVolume& v, int phase_a, int phase_b);

// Fraction of internal voxel edges whose four surrounding voxels carry all
// three phases. An edge parallel to one axis is surrounded by the 2x2 block
// of voxels offset in the other two axes.
double tpb_density(const PhaseVolume& v);

// P(label(x) == a and label(x + d*axis) == b), d = 0..dmax, both ends inside.
std::vector<double> two_point_correlation(const PhaseVolume& v, int phase_a, int phase_b,
                                          int axis, int64_t dmax);

// P(voxel of `phase` lies in a maximal run of length d along axis),
// d = 1..dmax; runs touching the volume boundary are dropped from the tally;
// denominator = all voxels of the phase.
std::vector<double> chord_length_distribution(const PhaseVolume& v, int phase, int axis,
                                              int64_t dmax);

// Uniform random label volume for oracle sweeps.
PhaseVolume random_volume(std::array<int64_t, 3> dims, int phases, uint64_t seed);

} // namespace voxfuse::oracle
