#include "rlmix/spectral.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "rlmix/errors.hpp"

namespace rlmix::spectral {

namespace {

using EMat = Eigen::MatrixXcd;
using EVec = Eigen::VectorXcd;

EMat to_eigen(const lattice::Hamiltonian& h) {
    EMat a(h.dim, h.dim);
    for (std::size_t i = 0; i < h.dim; ++i) {
        for (std::size_t j = 0; j < h.dim; ++j) {
            a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = h.at(i, j);
        }
    }
    return a;
}


// Greedy nearest-eigenvalue matching of the transpose solve onto the
// primary one. For the exactly symmetric matrices built here the two
// spectra are identical and this reduces to the identity map.
std::vector<std::size_t> match_eigenvalues(const CVector& primary, const CVector& other,
                                           double* max_mismatch) {
    const std::size_t n = primary.size();
    std::vector<bool> used(n, false);
    std::vector<std::size_t> match(n, 0);
    double worst = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (used[j]) continue;
            const double d = std::abs(other[j] - primary[k]);
            if (d < best) {
                best = d;
                best_j = j;
            }
        }
        used[best_j] = true;
        match[k] = best_j;
        worst = std::max(worst, best);
    }
    if (max_mismatch != nullptr) *max_mismatch = worst;
    return match;
}

double vec_norm2(const CVector& v) {
    double acc = 0.0;
    for (const Complex& z : v) acc += std::norm(z);
    return std::sqrt(acc);
}

void unit_normalize(CVector& v) {
    const double n = vec_norm2(v);
    if (n > 0.0) {
        for (Complex& z : v) z /= n;
    }
}

// Bilinear Gram-Schmidt inside machine-degenerate eigenvalue clusters.
// Eigen returns an arbitrary basis of a degenerate eigenspace; without
// this pass the off-diagonal bilinear products inside a diabolic doublet
// need not vanish and mode coefficients would mix. Near-defective
// clusters (quasi-norm collapse) are left untouched; the conditioning
// number gates their use downstream.
void orthogonalize_clusters(const CVector& values, std::vector<CVector>& vecs, double tol_deg) {
    const std::size_t n = values.size();
    std::size_t start = 0;
    while (start < n) {
        std::size_t end = start + 1;
        while (end < n && std::abs(values[end] - values[end - 1]) <= tol_deg) ++end;
        if (end - start > 1) {
            std::vector<CVector> ortho;
            bool ok = true;
            for (std::size_t k = start; k < end && ok; ++k) {
                CVector w = vecs[k];
                for (const CVector& prev : ortho) {
                    const Complex q = bilinear(prev, prev);
                    if (std::abs(q) < 1e-8) {
                        ok = false;
                        break;
                    }
                    const Complex coef = bilinear(prev, w) / q;
                    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= coef * prev[i];
                }
                const double nrm = vec_norm2(w);
                if (nrm < 1e-8) {
                    ok = false;
                    break;
                }
                unit_normalize(w);
                ortho.push_back(std::move(w));
            }
            if (ok) {
                for (std::size_t k = start; k < end; ++k) vecs[k] = ortho[k - start];
            }
        }
        start = end;
    }
}

double residual_of(const EMat& a, const CVector& vec, Complex lambda) {
    const Eigen::Index n = a.rows();
    EVec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = vec[static_cast<std::size_t>(i)];
    return (a * v - lambda * v).norm();
}

double condition_of(const std::vector<CVector>& vecs) {
    if (vecs.empty()) return 0.0;
    const Eigen::Index n = static_cast<Eigen::Index>(vecs.size());
    EMat m(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index i = 0; i < n; ++i) {
            m(i, k) = vecs[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
        }
    }
    Eigen::JacobiSVD<EMat> svd(m);
    const double smin = svd.singularValues()(n - 1);
    const double smax = svd.singularValues()(0);
    if (smin <= 0.0) return std::numeric_limits<double>::infinity();
    return smax / smin;
}

struct RawSolve {
    CVector values;
    std::vector<CVector> vectors;
};

RawSolve solve_sorted(const EMat& a, bool with_vectors) {
    Eigen::ComplexEigenSolver<EMat> es(a, with_vectors);
    if (es.info() != Eigen::Success) {
        std::ostringstream msg;
        msg << "complex eigensolver failed to converge (dim " << a.rows() << ", info "
            << static_cast<int>(es.info()) << ")";
        throw SolverError(msg.str());
    }
    const std::size_t n = static_cast<std::size_t>(a.rows());
    CVector values(n);
    for (std::size_t k = 0; k < n; ++k) values[k] = es.eigenvalues()(static_cast<Eigen::Index>(k));
    const auto perm = sort_spectrum_permutation(values);

    RawSolve out;
    out.values.resize(n);
    for (std::size_t k = 0; k < n; ++k) out.values[k] = values[perm[k]];
    if (with_vectors) {
        out.vectors.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            CVector v(n);
            for (std::size_t i = 0; i < n; ++i) {
                v[i] = es.eigenvectors()(static_cast<Eigen::Index>(i),
                                         static_cast<Eigen::Index>(perm[k]));
            }
            out.vectors[k] = std::move(v);
        }
    }
    return out;
}

} // namespace

Complex bilinear(const CVector& a, const CVector& b) {
    Complex acc(0.0, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

bool spectral_less(const Complex& a, const Complex& b) {
    const double ia = std::abs(a.imag());
    const double ib = std::abs(b.imag());
    if (ia != ib) return ia < ib;
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
}

std::vector<std::size_t> sort_spectrum_permutation(const CVector& values) {
    double max_im = 0.0;
    for (const Complex& z : values) max_im = std::max(max_im, std::abs(z.imag()));
    const double quantum = 1e-12 * std::max(1.0, max_im);

    struct Key {
        long long bucket;
        double re;
        double im;
    };
    std::vector<Key> keys(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
        keys[k] = Key{std::llround(std::abs(values[k].imag()) / quantum), values[k].real(),
                      values[k].imag()};
    }
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (keys[a].bucket != keys[b].bucket) return keys[a].bucket < keys[b].bucket;
        if (keys[a].re != keys[b].re) return keys[a].re < keys[b].re;
        return keys[a].im < keys[b].im;
    });
    return idx;
}

void sort_spectrum(CVector& values) {
    const auto perm = sort_spectrum_permutation(values);
    CVector sorted(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) sorted[k] = values[perm[k]];
    values = std::move(sorted);
}

std::optional<std::size_t> SpectralData::dark_index() const {
    if (eigenvalues.empty()) return std::nullopt;
    std::size_t best = 0;
    for (std::size_t k = 1; k < eigenvalues.size(); ++k) {
        if (std::abs(eigenvalues[k]) < std::abs(eigenvalues[best])) best = k;
    }
    const double scale = gamma > 0.0 ? gamma : h_norm;
    if (scale > 0.0 && std::abs(eigenvalues[best]) < 1e-9 * scale) return best;
    return std::nullopt;
}

SpectralData eigensolve(const lattice::Hamiltonian& h) {
    if (h.dim == 0) throw ParameterError("eigensolve: empty Hamiltonian");
    for (const Complex& z : h.entries) {
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
            throw ParameterError("eigensolve: Hamiltonian has non-finite entries");
        }
    }

    const EMat a = to_eigen(h);
    const double h_norm = h.frobenius_norm();
    const double tol_deg = 1e-12 * std::max(h_norm, 1e-300);

    RawSolve primary = solve_sorted(a, true);
    orthogonalize_clusters(primary.values, primary.vectors, tol_deg);

    // Left vectors from the transpose problem, matched mode by mode.
    const EMat at = a.transpose();
    RawSolve transposed = solve_sorted(at, true);
    orthogonalize_clusters(transposed.values, transposed.vectors, tol_deg);

    SpectralData out;
    out.dim = h.dim;
    out.h_norm = h_norm;
    out.gamma = h.spec.params.gamma;
    out.eigenvalues = primary.values;
    out.right = std::move(primary.vectors);

    const auto match = match_eigenvalues(out.eigenvalues, transposed.values, &out.transpose_mismatch);
    out.left.resize(h.dim);
    for (std::size_t k = 0; k < h.dim; ++k) {
        CVector lk = transposed.vectors[match[k]];
        const Complex s = bilinear(lk, out.right[k]);
        if (std::abs(s) > 0.0) {
            for (Complex& z : lk) z /= s;
        }
        out.left[k] = std::move(lk);
    }

    out.residuals.resize(h.dim);
    for (std::size_t k = 0; k < h.dim; ++k) {
        out.residuals[k] = residual_of(a, out.right[k], out.eigenvalues[k]);
        out.max_residual = std::max(out.max_residual, out.residuals[k]);
    }
    out.eigbasis_condition = condition_of(out.right);

    for (std::size_t j = 0; j < h.dim; ++j) {
        for (std::size_t k = 0; k < h.dim; ++k) {
            if (j == k) continue;
            out.biorth_offdiag = std::max(out.biorth_offdiag,
                                          std::abs(bilinear(out.left[j], out.right[k])));
        }
    }
    return out;
}

CVector eigenvalues_only(const lattice::Hamiltonian& h) {
    const EMat a = to_eigen(h);
    return solve_sorted(a, false).values;
}

CVector analytic_spectrum_linear(const lattice::CouplingParams& params, std::size_t n_lossy) {
    lattice::CouplingParams p = lattice::CouplingParams::make(params.v, params.phi, params.gamma);
    if (n_lossy < 1) throw ParameterError("analytic_spectrum_linear needs n_lossy >= 1");
    CVector values;
    values.reserve(2 * n_lossy + 1);
    values.push_back(Complex(0.0, 0.0));
    const double s2p = std::sin(2.0 * p.phi);
    for (std::size_t k = 1; k <= n_lossy; ++k) {
        const double mu =
            1.0 + s2p * std::cos(static_cast<double>(k) * std::numbers::pi /
                                 static_cast<double>(n_lossy + 1));
        const Complex disc =
            std::sqrt(Complex(p.gamma * p.gamma - 4.0 * p.v * p.v * mu, 0.0));
        values.push_back(Complex(0.0, -0.5) * (p.gamma + disc));
        values.push_back(Complex(0.0, -0.5) * (p.gamma - disc));
    }
    sort_spectrum(values);
    return values;
}

double lrep_linear_analytic(const lattice::CouplingParams& params, std::size_t n_lossy) {
    lattice::CouplingParams p = lattice::CouplingParams::make(params.v, params.phi, params.gamma);
    if (n_lossy < 1) throw ParameterError("lrep_linear_analytic needs n_lossy >= 1");
    const double mu_min = 1.0 - std::sin(2.0 * p.phi) *
                                    std::cos(std::numbers::pi / static_cast<double>(n_lossy + 1));
    return 1.0 / (2.0 * std::sqrt(mu_min));
}

const char* degeneracy_kind_name(DegeneracyKind k) {
    return k == DegeneracyKind::diabolic ? "diabolic" : "exceptional";
}

DegeneracyReport classify_degeneracy(const lattice::Hamiltonian& h,
                                     const std::vector<std::size_t>& cluster) {
    if (cluster.size() < 2) {
        throw PreconditionError("classify_degeneracy needs a cluster of at least two eigenvalues");
    }
    const double gamma = h.spec.params.gamma;
    SpectralData sd = eigensolve(h);
    for (std::size_t idx : cluster) {
        if (idx >= sd.dim) throw PreconditionError("classify_degeneracy: cluster index out of range");
    }
    Complex mean(0.0, 0.0);
    for (std::size_t idx : cluster) mean += sd.eigenvalues[idx];
    mean /= static_cast<double>(cluster.size());
    for (std::size_t a : cluster) {
        for (std::size_t b : cluster) {
            if (std::abs(sd.eigenvalues[a] - sd.eigenvalues[b]) > 1e-6 * gamma) {
                throw PreconditionError(
                    "classify_degeneracy: cluster eigenvalues are not degenerate within 1e-6 gamma");
            }
        }
    }

    EMat shifted = to_eigen(h);
    for (Eigen::Index i = 0; i < shifted.rows(); ++i) shifted(i, i) -= mean;
    Eigen::JacobiSVD<EMat> svd(shifted);
    const double tol = 1e-7 * sd.h_norm;
    std::size_t geometric = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
        if (svd.singularValues()(i) < tol) ++geometric;
    }

    double min_angle = std::numbers::pi / 2.0;
    for (std::size_t a = 0; a < cluster.size(); ++a) {
        for (std::size_t b = a + 1; b < cluster.size(); ++b) {
            const CVector& u = sd.right[cluster[a]];
            const CVector& v = sd.right[cluster[b]];
            Complex dot(0.0, 0.0);
            for (std::size_t i = 0; i < u.size(); ++i) dot += std::conj(u[i]) * v[i];
            const double c = std::min(1.0, std::abs(dot));
            min_angle = std::min(min_angle, std::acos(c));
        }
    }

    DegeneracyReport report;
    report.v_over_gamma = h.spec.params.v / gamma;
    report.cluster = cluster;
    report.geometric_multiplicity = geometric;
    report.kind = (geometric >= cluster.size()) ? DegeneracyKind::diabolic
                                                : DegeneracyKind::exceptional;
    report.eigenvector_angle = min_angle;
    return report;
}

lattice::Hamiltonian build_at_ratio(const lattice::LatticeSpec& family, double ratio) {
    lattice::LatticeSpec s = family;
    s.params.v = ratio * s.params.gamma;
    return lattice::build(s);
}

namespace {

RVector sorted_im_parts(const CVector& values) {
    RVector im(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) im[k] = values[k].imag();
    std::sort(im.begin(), im.end());
    return im;
}

double golden_min(const std::function<double(double)>& f, double a, double b, int iters) {
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    double fc = f(c);
    double fd = f(d);
    for (int i = 0; i < iters; ++i) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
        if (!(b - a > 0.0)) break;
    }
    return 0.5 * (a + b);
}

} // namespace

EpScan ep_scan(const lattice::LatticeSpec& family, const RVector& grid) {
    if (grid.size() < 3) throw ParameterError("ep_scan: grid needs at least 3 points");
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        if (!(grid[i] < grid[i + 1])) throw ParameterError("ep_scan: grid must be strictly increasing");
    }
    if (!(grid.front() > 0.0)) throw ParameterError("ep_scan: grid ratios must be positive");

    const double gamma = family.params.gamma;
    const double tau_c = 1e-6 * gamma; // coalescence threshold on the Im gap

    EpScan scan;
    scan.grid = grid;
    scan.im_branches.reserve(grid.size());

    std::vector<RVector> ims(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        ims[i] = sorted_im_parts(eigenvalues_only(build_at_ratio(family, grid[i])));
        RVector scaled = ims[i];
        for (double& x : scaled) x /= gamma;
        scan.im_branches.push_back(std::move(scaled));
    }

    const std::size_t n = ims.front().size();
    auto pair_gap_at = [&](double x, std::size_t k) {
        const RVector im = sorted_im_parts(eigenvalues_only(build_at_ratio(family, x)));
        return im[k + 1] - im[k];
    };
    auto pair_spread_at = [&](double x, std::size_t k) {
        CVector values = eigenvalues_only(build_at_ratio(family, x));
        std::sort(values.begin(), values.end(),
                  [](const Complex& a, const Complex& b) { return a.imag() < b.imag(); });
        return std::abs(values[k + 1] - values[k]);
    };

    for (std::size_t k = 0; k + 1 < n; ++k) {
        for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
            const bool lo_coal = (ims[i][k + 1] - ims[i][k]) < tau_c;
            const bool hi_coal = (ims[i + 1][k + 1] - ims[i + 1][k]) < tau_c;
            if (lo_coal == hi_coal) continue;

            // Bisect the split/merge boundary to abscissa tolerance 1e-8.
            double lo = grid[i];
            double hi = grid[i + 1];
            bool lo_state = lo_coal;
            while (hi - lo > 1e-8) {
                const double mid = 0.5 * (lo + hi);
                const bool mid_state = pair_gap_at(mid, k) < tau_c;
                if (mid_state == lo_state) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            double abscissa = 0.5 * (lo + hi);

            // Polish by minimizing the full complex spread of the pair;
            // this pins the abscissa far below the bisection tolerance so
            // the degeneracy classifier sees a genuinely coalesced cluster.
            const double bracket = 5e-7;
            const double a = std::max(abscissa - bracket, 0.5 * grid.front());
            const double b = abscissa + bracket;
            abscissa = golden_min([&](double x) { return pair_spread_at(x, k); }, a, b, 70);

            bool duplicate = false;
            for (const Coalescence& c : scan.coalescences) {
                if (std::abs(c.abscissa - abscissa) < 1e-6) {
                    duplicate = true;
                    break;
                }
            }
            if (duplicate) continue;

            // Cluster members at the polished point, in spectral_less order.
            const lattice::Hamiltonian hc = build_at_ratio(family, abscissa);
            const CVector values = eigenvalues_only(hc);
            CVector by_im = values;
            std::sort(by_im.begin(), by_im.end(),
                      [](const Complex& x, const Complex& y) { return x.imag() < y.imag(); });
            const Complex center = 0.5 * (by_im[k] + by_im[k + 1]);
            std::vector<std::size_t> cluster;
            for (std::size_t j = 0; j < values.size(); ++j) {
                if (std::abs(values[j] - center) <= 1e-6 * gamma) cluster.push_back(j);
            }

            Coalescence c;
            c.abscissa = abscissa;
            c.cluster_size = cluster.size();
            if (cluster.size() >= 2) {
                try {
                    const DegeneracyReport rep = classify_degeneracy(hc, cluster);
                    c.kind = rep.kind;
                    c.geometric_multiplicity = rep.geometric_multiplicity;
                } catch (const PreconditionError& e) {
                    scan.warnings.push_back("classification failed at v/gamma = " +
                                            std::to_string(abscissa) + ": " + e.what());
                }
            } else {
                scan.warnings.push_back("coalescence near v/gamma = " + std::to_string(abscissa) +
                                        " could not be resolved below tolerance");
                c.cluster_size = 2;
            }
            scan.coalescences.push_back(c);
        }
    }

    std::sort(scan.coalescences.begin(), scan.coalescences.end(),
              [](const Coalescence& a, const Coalescence& b) { return a.abscissa < b.abscissa; });
    if (!scan.coalescences.empty()) {
        scan.lrep = scan.coalescences.back().abscissa;
    } else {
        scan.warnings.push_back(
            "no coalescence transition bracketed by the grid; the gap function has no sign "
            "structure in this range (grid too coarse or no exceptional point inside it)");
    }
    return scan;
}

std::vector<std::pair<std::size_t, double>> gap_vs_size(const lattice::LatticeSpec& family,
                                                        const std::vector<std::size_t>& sizes) {
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
        if (!(sizes[i] < sizes[i + 1])) throw ParameterError("gap_vs_size: sizes must be ascending");
    }
    std::vector<std::pair<std::size_t, double>> out;
    out.reserve(sizes.size());
    for (std::size_t nl : sizes) {
        lattice::LatticeSpec s = family;
        s.n_lossy = nl;
        if (s.topology == lattice::Topology::ring) {
            s.delta = lattice::balanced_delta(s.params, nl);
        }
        const CVector values = eigenvalues_only(lattice::build(s));
        RVector abs_im(values.size());
        for (std::size_t k = 0; k < values.size(); ++k) abs_im[k] = std::abs(values[k].imag());
        std::sort(abs_im.begin(), abs_im.end());
        if (abs_im.size() < 2) throw ParameterError("gap_vs_size: spectrum too small");
        out.emplace_back(nl, abs_im[1]);
    }
    return out;
}

} // namespace rlmix::spectral
