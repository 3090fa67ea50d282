#include "rlmix/initstate.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>

#include "rlmix/errors.hpp"
#include "rlmix/kernels.hpp"

namespace rlmix::initstate {

namespace {

double vec_norm(const CVector& v) {
    return std::sqrt(kernels::sum_abs2(v.size(), v.data()));
}

} // namespace

dynamics::AmplitudeState dark_state(const lattice::LatticeSpec& spec) {
    const lattice::Hamiltonian h = lattice::build(spec);
    const std::size_t dim = h.dim;
    const double ratio = -spec.params.v1() / spec.params.v2();

    CVector psi(dim, Complex(0.0, 0.0));
    double amp = 1.0;
    for (std::size_t i = 0; i < dim; i += 2) { // lossless nodes only
        psi[i] = amp;
        amp *= ratio;
        if (!std::isfinite(amp)) {
            throw ParameterError("dark_state: amplitude profile overflows for this (phi, size)");
        }
    }
    const double norm = vec_norm(psi);
    for (Complex& z : psi) z /= norm;

    CVector res(dim);
    kernels::cmatvec(dim, h.entries.data(), psi.data(), res.data());
    const double residual = vec_norm(res);
    if (residual > 1e-10 * h.frobenius_norm()) {
        if (spec.topology == lattice::Topology::ring) {
            throw NoDarkStateError(
                "ring is not balanced (delta != balanced_delta); it has no dark state "
                "(kernel residual " +
                std::to_string(residual) + ")");
        }
        throw NumericalError("dark_state: kernel residual check failed");
    }
    return dynamics::AmplitudeState{0.0, std::move(psi)};
}

dynamics::AmplitudeState basis_excitation(const lattice::LatticeSpec& spec, std::size_t node) {
    const std::size_t dim = spec.dim();
    if (node < 1 || node > dim) {
        throw ParameterError("basis_excitation: node " + std::to_string(node) +
                             " out of range 1.." + std::to_string(dim));
    }
    CVector psi(dim, Complex(0.0, 0.0));
    psi[node - 1] = 1.0;
    return dynamics::AmplitudeState{0.0, std::move(psi)};
}

std::size_t middle_lossless_node(const lattice::LatticeSpec& spec) {
    if (spec.topology == lattice::Topology::ring) {
        throw PreconditionError("middle_lossless_node is defined for open chains");
    }
    const std::size_t nl = spec.n_lossy;
    return (nl % 2 == 1) ? nl : nl + 1;
}

dynamics::AmplitudeState StateRecipe::to_state(std::size_t dim) const {
    CVector psi(dim, Complex(0.0, 0.0));
    for (std::size_t i = 0; i < support.size(); ++i) {
        psi[support[i] - 1] = amplitudes[i];
    }
    return dynamics::AmplitudeState{0.0, std::move(psi)};
}

StateRecipe orthogonal_recipe(const lattice::LatticeSpec& spec,
                              const std::vector<std::size_t>& support,
                              const std::vector<std::size_t>& kill_modes) {
    const spectral::SpectralData sd = spectral::eigensolve(lattice::build(spec));
    return orthogonal_recipe(spec, sd, support, kill_modes);
}

StateRecipe orthogonal_recipe(const lattice::LatticeSpec& spec, const spectral::SpectralData& sd,
                              const std::vector<std::size_t>& support,
                              const std::vector<std::size_t>& kill_modes) {
    const std::size_t dim = spec.dim();
    if (support.empty()) throw ParameterError("orthogonal_recipe: empty support");
    for (std::size_t node : support) {
        if (node < 1 || node > dim) throw ParameterError("orthogonal_recipe: support node out of range");
    }
    for (std::size_t k : kill_modes) {
        if (k >= sd.dim) throw ParameterError("orthogonal_recipe: kill mode out of range");
    }
    {
        std::vector<std::size_t> s = support;
        std::sort(s.begin(), s.end());
        if (std::adjacent_find(s.begin(), s.end()) != s.end()) {
            throw ParameterError("orthogonal_recipe: duplicate support node");
        }
    }
    for (std::size_t k : kill_modes) {
        for (const Complex& z : sd.left[k]) {
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
                throw PreconditionError(
                    "orthogonal_recipe: left vectors ill-defined (at an exceptional point?)");
            }
        }
    }

    // Constraint matrix: kill-mode left vectors restricted to the support.
    // Rows whose restriction already vanishes impose nothing and are
    // dropped (this is what makes single-node recipes on symmetry zeros
    // feasible). The remaining rows are normalized so the rank tolerance
    // is scale-free.
    const std::size_t s = support.size();
    std::vector<CVector> rows;
    for (std::size_t k : kill_modes) {
        CVector row(s);
        double restricted = 0.0;
        for (std::size_t c = 0; c < s; ++c) {
            row[c] = sd.left[k][support[c] - 1];
            restricted += std::norm(row[c]);
        }
        restricted = std::sqrt(restricted);
        const double full = vec_norm(sd.left[k]);
        if (restricted <= 1e-14 * full) continue;
        for (Complex& z : row) z /= restricted;
        rows.push_back(std::move(row));
    }

    CVector amps(s);
    if (rows.empty()) {
        // Unconstrained: spread the excitation uniformly over the support.
        const double a = 1.0 / std::sqrt(static_cast<double>(s));
        for (Complex& z : amps) z = a;
    } else {
        Eigen::MatrixXcd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(s));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            for (std::size_t c = 0; c < s; ++c) {
                m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
            }
        }
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        const double smax = sv(0);
        const Eigen::Index rank_limit = std::min<Eigen::Index>(sv.size(), static_cast<Eigen::Index>(s));
        Eigen::Index rank = 0;
        for (Eigen::Index i = 0; i < rank_limit; ++i) {
            if (sv(i) > 1e-10 * smax) ++rank;
        }
        if (rank >= static_cast<Eigen::Index>(s)) {
            throw InfeasibleRecipeError(
                "orthogonal_recipe: constraints leave only the trivial null space on this support");
        }
        // Null-space direction: right singular vector of the smallest
        // singular value.
        for (std::size_t c = 0; c < s; ++c) {
            amps[c] = svd.matrixV()(static_cast<Eigen::Index>(c),
                                    static_cast<Eigen::Index>(s - 1));
        }
    }

    const double norm = vec_norm(amps);
    for (Complex& z : amps) z /= norm;

    StateRecipe recipe;
    recipe.support = support;
    recipe.kill_modes = kill_modes;
    recipe.amplitudes = std::move(amps);

    // Verify the postconditions against the full decomposition.
    const dynamics::AmplitudeState state = recipe.to_state(dim);
    for (std::size_t k : kill_modes) {
        const double c = std::abs(spectral::bilinear(sd.left[k], state.psi));
        if (c >= 1e-8) {
            throw InfeasibleRecipeError(
                "orthogonal_recipe: killed-mode coefficient " + std::to_string(c) +
                " exceeds 1e-8 after null-space extraction");
        }
    }
    if (const auto dark = sd.dark_index()) {
        const double cdark = std::abs(spectral::bilinear(sd.left[*dark], state.psi));
        recipe.dark_orthogonal = cdark < 1e-8;
    }
    return recipe;
}

std::vector<std::size_t> slowest_modes(const spectral::SpectralData& sd, std::size_t m) {
    const auto dark = sd.dark_index();
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < sd.dim && out.size() < m; ++k) {
        if (dark && k == *dark) continue;
        out.push_back(k);
    }
    return out;
}

std::vector<std::size_t> centered_lossless_support(const lattice::LatticeSpec& spec,
                                                   std::size_t count) {
    std::vector<std::size_t> lossless;
    for (std::size_t node = 1; node <= spec.dim(); node += 2) lossless.push_back(node);
    if (count == 0 || count > lossless.size()) {
        throw ParameterError("centered_lossless_support: bad support size");
    }
    const std::size_t center = (lossless.size() - 1) / 2;
    std::size_t lo = center;
    std::size_t hi = center;
    while (hi - lo + 1 < count) {
        if (hi + 1 < lossless.size() && (hi - lo) % 2 == 0) {
            ++hi;
        } else if (lo > 0) {
            --lo;
        } else {
            ++hi;
        }
    }
    return std::vector<std::size_t>(lossless.begin() + static_cast<std::ptrdiff_t>(lo),
                                    lossless.begin() + static_cast<std::ptrdiff_t>(hi + 1));
}

} // namespace rlmix::initstate
