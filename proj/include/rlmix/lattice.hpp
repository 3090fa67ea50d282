#pragma once

#include <cmath>
#include <cstddef>

#include "rlmix/types.hpp"

namespace rlmix::lattice {

// Coupling amplitude v, asymmetry angle phi and loss rate gamma. The two
// bond strengths are derived as v1 = v cos(phi), v2 = v sin(phi); phi is
// restricted to (0, pi/2) so both stay positive.
struct CouplingParams {
    double v = 0.0;
    double phi = 0.0;
    double gamma = 0.0;

    double v1() const { return v * std::cos(phi); }
    double v2() const { return v * std::sin(phi); }

    // Validates v > 0, gamma > 0, 0 < phi < pi/2; throws ParameterError.
    static CouplingParams make(double v, double phi, double gamma);
};

enum class Topology { dbs, linear, ring };

const char* topology_name(Topology t);

// A lattice family instance: topology, lossy-node count, couplings, and
// (for rings) the weight delta on the closing bond.
struct LatticeSpec {
    Topology topology = Topology::dbs;
    std::size_t n_lossy = 1;
    CouplingParams params;
    double delta = 0.0;

    std::size_t dim() const;

    static LatticeSpec dbs(const CouplingParams& p);
    static LatticeSpec linear(const CouplingParams& p, std::size_t n_lossy);
    static LatticeSpec ring(const CouplingParams& p, std::size_t n_lossy, double delta);
    // Ring with delta solving the stationary-state balance condition.
    static LatticeSpec ring_balanced(const CouplingParams& p, std::size_t n_lossy);
};

// Dense complex-symmetric effective Hamiltonian. Node order is the wire
// order used everywhere: 1-based interleaved (alpha_1, beta_1, alpha_2,
// beta_2, ...); odd 1-based indices are lossless alpha nodes, even ones
// are lossy beta nodes carrying -i*gamma on the diagonal.
struct Hamiltonian {
    std::size_t dim = 0;
    CVector entries; // row-major dim*dim
    LatticeSpec spec;

    Complex at(std::size_t i, std::size_t j) const { return entries[i * dim + j]; }
    Complex& at(std::size_t i, std::size_t j) { return entries[i * dim + j]; }

    double frobenius_norm() const;
};

// True for lossy (beta) nodes; index is 0-based.
inline bool is_lossy_node(std::size_t index0) { return index0 % 2 == 1; }

Hamiltonian build_dbs(const CouplingParams& params);
Hamiltonian build_linear(const CouplingParams& params, std::size_t n_lossy);
Hamiltonian build_ring(const CouplingParams& params, std::size_t n_lossy, double delta);
Hamiltonian build(const LatticeSpec& spec);

// Delta solving v1^NL + (-1)^(NL+1) * delta * v2^NL = 0, i.e.
// delta = (-1)^NL (v1/v2)^NL.
double balanced_delta(const CouplingParams& params, std::size_t n_lossy);

} // namespace rlmix::lattice
