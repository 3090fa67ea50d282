#include "rlmix/lattice.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "rlmix/errors.hpp"

namespace rlmix::lattice {

CouplingParams CouplingParams::make(double v, double phi, double gamma) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw ParameterError("coupling amplitude v must be positive and finite, got " +
                             std::to_string(v));
    }
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw ParameterError("loss rate gamma must be positive and finite, got " +
                             std::to_string(gamma));
    }
    if (!(phi > 0.0) || !(phi < std::numbers::pi / 2.0)) {
        throw ParameterError("asymmetry angle phi must lie in (0, pi/2), got " +
                             std::to_string(phi));
    }
    return CouplingParams{v, phi, gamma};
}

const char* topology_name(Topology t) {
    switch (t) {
        case Topology::dbs: return "dbs";
        case Topology::linear: return "linear";
        case Topology::ring: return "ring";
    }
    return "?";
}

std::size_t LatticeSpec::dim() const {
    switch (topology) {
        case Topology::dbs: return 3;
        case Topology::linear: return 2 * n_lossy + 1;
        case Topology::ring: return 2 * n_lossy;
    }
    return 0;
}

LatticeSpec LatticeSpec::dbs(const CouplingParams& p) {
    return LatticeSpec{Topology::dbs, 1, p, 0.0};
}

LatticeSpec LatticeSpec::linear(const CouplingParams& p, std::size_t n_lossy) {
    if (n_lossy < 1) throw ParameterError("linear lattice needs n_lossy >= 1");
    return LatticeSpec{Topology::linear, n_lossy, p, 0.0};
}

LatticeSpec LatticeSpec::ring(const CouplingParams& p, std::size_t n_lossy, double delta) {
    if (n_lossy < 2) throw ParameterError("ring lattice needs n_lossy >= 2");
    return LatticeSpec{Topology::ring, n_lossy, p, delta};
}

LatticeSpec LatticeSpec::ring_balanced(const CouplingParams& p, std::size_t n_lossy) {
    return ring(p, n_lossy, balanced_delta(p, n_lossy));
}

double Hamiltonian::frobenius_norm() const {
    double acc = 0.0;
    for (const Complex& z : entries) acc += std::norm(z);
    return std::sqrt(acc);
}

namespace {

Hamiltonian zero_hamiltonian(const LatticeSpec& spec) {
    Hamiltonian h;
    h.dim = spec.dim();
    h.entries.assign(h.dim * h.dim, Complex(0.0, 0.0));
    h.spec = spec;
    return h;
}

// Places the shared tridiagonal pattern: for each lossy node beta_n
// (1-based index 2n) the diagonal -i*gamma, the bond to alpha_n with v1
// and, when present, the bond to alpha_{n+1} with v2.
void fill_chain_bonds(Hamiltonian& h, const CouplingParams& p, std::size_t n_lossy) {
    const Complex loss(0.0, -p.gamma);
    const double v1 = p.v1();
    const double v2 = p.v2();
    for (std::size_t n = 1; n <= n_lossy; ++n) {
        const std::size_t beta = 2 * n - 1; // 0-based index of beta_n
        h.at(beta, beta) = loss;
        h.at(beta - 1, beta) = v1;
        h.at(beta, beta - 1) = v1;
        if (beta + 1 < h.dim) {
            h.at(beta, beta + 1) = v2;
            h.at(beta + 1, beta) = v2;
        }
    }
}

} // namespace

Hamiltonian build_dbs(const CouplingParams& params) {
    return build_linear(params, 1);
}

Hamiltonian build_linear(const CouplingParams& params, std::size_t n_lossy) {
    CouplingParams p = CouplingParams::make(params.v, params.phi, params.gamma);
    Hamiltonian h = zero_hamiltonian(LatticeSpec::linear(p, n_lossy));
    fill_chain_bonds(h, p, n_lossy);
    return h;
}

Hamiltonian build_ring(const CouplingParams& params, std::size_t n_lossy, double delta) {
    CouplingParams p = CouplingParams::make(params.v, params.phi, params.gamma);
    if (!std::isfinite(delta)) throw ParameterError("ring delta must be finite");
    Hamiltonian h = zero_hamiltonian(LatticeSpec::ring(p, n_lossy, delta));
    fill_chain_bonds(h, p, n_lossy);
    // beta_{NL} closes the ring onto alpha_1 with weight delta*v2.
    const double corner = delta * p.v2();
    h.at(0, h.dim - 1) = corner;
    h.at(h.dim - 1, 0) = corner;
    return h;
}

Hamiltonian build(const LatticeSpec& spec) {
    switch (spec.topology) {
        case Topology::dbs: return build_dbs(spec.params);
        case Topology::linear: return build_linear(spec.params, spec.n_lossy);
        case Topology::ring: return build_ring(spec.params, spec.n_lossy, spec.delta);
    }
    throw ParameterError("unknown topology");
}

double balanced_delta(const CouplingParams& params, std::size_t n_lossy) {
    CouplingParams p = CouplingParams::make(params.v, params.phi, params.gamma);
    if (n_lossy < 2) throw ParameterError("balanced_delta needs n_lossy >= 2");
    const double v2 = p.v2();
    if (v2 < 1e-300) {
        throw SingularParameterError("balance condition is singular for v2 = 0 (phi = 0)");
    }
    const double ratio = p.v1() / v2;
    const double magnitude = std::pow(ratio, static_cast<double>(n_lossy));
    if (!std::isfinite(magnitude)) {
        throw SingularParameterError("balanced delta overflows for this (phi, n_lossy)");
    }
    return (n_lossy % 2 == 0) ? magnitude : -magnitude;
}

} // namespace rlmix::lattice
