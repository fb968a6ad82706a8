#pragma once

#include "volgrid.hpp"

namespace voxfuse {

// Synthetic three-phase structures for self-contained pipeline runs and
// tests. Palette order is always {pore, AM, binder} (labels 0, 1, 2).

// Isotropic: overlapping random spheres of active material, each wrapped in
// a thin binder shell, embedded in pore space.
PhaseVolume make_sphere_shell_fixture(int64_t side, uint64_t seed, double pitch_nm = 1.0);

// Anisotropic: active-material lamellae stacked along z with binder fibrils
// running through the pore space along z. Slices through different axes are
// statistically distinct.
PhaseVolume make_lamellae_fixture(int64_t side, uint64_t seed, double pitch_nm = 1.0);

} // namespace voxfuse
