#pragma once

#include <cstddef>
#include <vector>

#include "rlmix/dynamics.hpp"
#include "rlmix/lattice.hpp"
#include "rlmix/spectral.hpp"
#include "rlmix/types.hpp"

namespace rlmix::initstate {

// Unit-norm kernel vector of H: zero on every lossy node, geometric
// amplitude profile alpha_{n+1} = -(v1/v2) alpha_n on the lossless ones.
// Residual-verified after construction. Rings admit a dark state only
// when delta satisfies the balance condition; otherwise NoDarkStateError.
dynamics::AmplitudeState dark_state(const lattice::LatticeSpec& spec);

// Unit vector on one node. Node indices are 1-based in the interleaved
// wire order (node 1 = alpha_1). Exciting a lossy node is allowed; use
// lattice::is_lossy_node to flag it at the surface.
dynamics::AmplitudeState basis_excitation(const lattice::LatticeSpec& spec, std::size_t node);

// 1-based index of the middle lossless node of a chain: node NL for odd
// NL, node NL+1 for even NL.
std::size_t middle_lossless_node(const lattice::LatticeSpec& spec);

struct StateRecipe {
    std::vector<std::size_t> support;    // 1-based node indices
    std::vector<std::size_t> kill_modes; // indices into the sorted spectrum
    CVector amplitudes;                  // aligned with support, unit norm
    bool dark_orthogonal = false;        // flagged when the dark overlap vanished too

    dynamics::AmplitudeState to_state(std::size_t dim) const;
};

// Sparse state supported on the given nodes with vanishing projection
// onto every kill mode, via null-space extraction from the left vectors
// restricted to the support. Needs |support| >= |kill_modes| + 1 in
// general; smaller supports work only when the left vectors already
// vanish there.
StateRecipe orthogonal_recipe(const lattice::LatticeSpec& spec,
                              const std::vector<std::size_t>& support,
                              const std::vector<std::size_t>& kill_modes);

// Same, against an existing decomposition of the lattice.
StateRecipe orthogonal_recipe(const lattice::LatticeSpec& spec, const spectral::SpectralData& sd,
                              const std::vector<std::size_t>& support,
                              const std::vector<std::size_t>& kill_modes);

// Default kill set: the m non-dark modes with smallest |Im lambda|.
std::vector<std::size_t> slowest_modes(const spectral::SpectralData& sd, std::size_t m);

// Default support: contiguous lossless nodes centered on the lattice
// middle (1-based).
std::vector<std::size_t> centered_lossless_support(const lattice::LatticeSpec& spec,
                                                   std::size_t count);

} // namespace rlmix::initstate
