#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rlmix/lattice.hpp"
#include "rlmix/types.hpp"

namespace rlmix::spectral {

// Bilinear (unconjugated) pairing sum_i a_i b_i. This is the natural
// inner product for complex-symmetric Hamiltonians: right eigenvectors
// of distinct eigenvalues are bilinear-orthogonal, and left vectors are
// transposes of right ones.
Complex bilinear(const CVector& a, const CVector& b);

// Sort key used for every spectrum: ascending |Im|, ties by ascending
// Re, then ascending Im. The dark mode (lambda = 0) comes first and the
// slowest decaying modes follow.
bool spectral_less(const Complex& a, const Complex& b);

// Canonical in-place spectrum ordering. |Im| is quantized to 1e-12 of
// its largest value before comparing, so coalesced branches that agree
// only to solver precision still fall into the Re tiebreak in the same
// order as an exact (analytic) list.
void sort_spectrum(CVector& values);
std::vector<std::size_t> sort_spectrum_permutation(const CVector& values);

struct SpectralData {
    std::size_t dim = 0;
    CVector eigenvalues;            // sorted by spectral_less
    std::vector<CVector> right;     // unit 2-norm right eigenvectors
    std::vector<CVector> left;      // normalized so bilinear(left_k, right_k) = 1
    RVector residuals;              // per-mode ||H r_k - lambda_k r_k||_2
    double max_residual = 0.0;
    double eigbasis_condition = 0.0; // kappa_2 of the right-eigenvector matrix
    double h_norm = 0.0;             // Frobenius norm of the input matrix
    double gamma = 0.0;              // loss rate of the originating lattice (0 if unknown)
    double biorth_offdiag = 0.0;     // max |bilinear(left_j, right_k)| over j != k
    double transpose_mismatch = 0.0; // eigenvalue mismatch between H and H^T solves

    // Index of the zero mode when |lambda| < 1e-9 * max(gamma, h_norm-based scale).
    std::optional<std::size_t> dark_index() const;
};

// Full complex eigendecomposition with left vectors from the transpose
// problem, sorted and biorthogonally normalized. Throws SolverError on
// non-convergence.
SpectralData eigensolve(const lattice::Hamiltonian& h);

// Eigenvalues only (same sorting), for sweeps that do not need vectors.
CVector eigenvalues_only(const lattice::Hamiltonian& h);

// Closed-form spectrum of the open chain: lambda_0 = 0 plus
// lambda_k^{+-} = -(i/2) (gamma +- sqrt(gamma^2 - 4 v^2 mu_k)) with
// mu_k = 1 + sin(2 phi) cos(k pi / (NL + 1)), k = 1..NL. Sorted.
CVector analytic_spectrum_linear(const lattice::CouplingParams& params, std::size_t n_lossy);

// Largest exceptional-point ratio of the open chain, 1 / (2 sqrt(mu_min))
// with mu_min = 1 - sin(2 phi) cos(pi / (NL + 1)).
double lrep_linear_analytic(const lattice::CouplingParams& params, std::size_t n_lossy);

enum class DegeneracyKind { exceptional, diabolic };

const char* degeneracy_kind_name(DegeneracyKind k);

struct DegeneracyReport {
    double v_over_gamma = 0.0;
    std::vector<std::size_t> cluster;   // indices into the spectral_less order
    DegeneracyKind kind = DegeneracyKind::exceptional;
    std::size_t geometric_multiplicity = 0;
    double eigenvector_angle = 0.0;     // smallest pairwise principal angle, radians
};

// Estimates the geometric multiplicity of a degenerate cluster as the
// number of singular values of (H - mean(lambda) I) below 1e-7 ||H||_F,
// and labels the cluster diabolic when it equals the cluster size.
// Precondition: all cluster eigenvalues within 1e-6 gamma of each other.
DegeneracyReport classify_degeneracy(const lattice::Hamiltonian& h,
                                     const std::vector<std::size_t>& cluster);

struct Coalescence {
    double abscissa = 0.0;                 // v / gamma
    std::size_t cluster_size = 0;
    DegeneracyKind kind = DegeneracyKind::exceptional;
    std::size_t geometric_multiplicity = 0; // 0 when classification failed
};

struct EpScan {
    RVector grid;                          // scanned v / gamma values
    std::vector<RVector> im_branches;      // per grid point, Im(lambda)/gamma ascending
    std::vector<Coalescence> coalescences; // refined, ascending abscissa
    std::optional<double> lrep;            // largest coalescence abscissa
    std::vector<std::string> warnings;     // detection-quality notes, never silent
};

// Tracks sorted Im branches over the grid, brackets every split/merge
// transition, refines each by bisection on the pairwise Im gap and then
// polishes the abscissa by minimizing the cluster spread.
EpScan ep_scan(const lattice::LatticeSpec& family, const RVector& grid);

// Second-smallest |Im lambda| (the decay gap above the dark state) per
// lattice size. Rings are rebalanced at every size.
std::vector<std::pair<std::size_t, double>> gap_vs_size(const lattice::LatticeSpec& family,
                                                        const std::vector<std::size_t>& sizes);

// Builds the family member at coupling ratio v/gamma = ratio.
lattice::Hamiltonian build_at_ratio(const lattice::LatticeSpec& family, double ratio);

} // namespace rlmix::spectral
