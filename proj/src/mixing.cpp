#include "rlmix/mixing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rlmix/errors.hpp"
#include "rlmix/initstate.hpp"
#include "rlmix/kernels.hpp"
#include "rlmix/parallel.hpp"

namespace rlmix::mixing {

namespace {

constexpr double kDarkThreshold = 1e-8;   // |c_dark| / ||c|| above this: conventional
constexpr double kCoeffThreshold = 1e-8;  // modes below this are treated as unpopulated
constexpr double kAmbiguousLow = 1e-10;
constexpr double kAmbiguousHigh = 1e-6;

} // namespace

const char* mix_class_name(MixClass c) {
    switch (c) {
        case MixClass::conventional: return "conventional";
        case MixClass::unconventional: return "unconventional";
        case MixClass::non_mixing: return "non-mixing";
    }
    return "?";
}

StationaryResult stationary_distribution(const spectral::SpectralData& sd,
                                         const dynamics::ModeCoefficients& mc) {
    if (mc.c.size() != sd.dim) {
        throw ParameterError("stationary_distribution: coefficient count does not match spectrum");
    }
    double norm_sq = 0.0;
    for (const Complex& z : mc.c) norm_sq += std::norm(z);
    const double cnorm = std::sqrt(norm_sq);
    if (!(cnorm > 0.0)) {
        throw DegenerateInputError("stationary_distribution: all mode coefficients vanish");
    }

    StationaryResult out;
    out.coeff_norm = cnorm;
    const auto dark = sd.dark_index();
    out.dark_overlap_abs = dark ? std::abs(mc.c[*dark]) : 0.0;
    const double rel = out.dark_overlap_abs / cnorm;
    out.ambiguous = (rel >= kAmbiguousLow && rel <= kAmbiguousHigh);

    if (dark && rel > kDarkThreshold) {
        out.cls = MixClass::conventional;
        RVector p(sd.dim);
        kernels::abs2(sd.dim, sd.right[*dark].data(), p.data());
        double total = std::accumulate(p.begin(), p.end(), 0.0);
        for (double& x : p) x /= total;
        out.p_st = std::move(p);
        return out;
    }

    // Orthogonal-to-dark branch: the populated modes with the slowest
    // decay decide the limit.
    std::vector<std::size_t> populated;
    for (std::size_t k = 0; k < sd.dim; ++k) {
        if (dark && k == *dark) continue;
        if (std::abs(mc.c[k]) > kCoeffThreshold * cnorm) populated.push_back(k);
    }
    if (populated.empty()) {
        throw DegenerateInputError(
            "stationary_distribution: state carries no significant mode content");
    }
    const double tol = 1e-9 * (sd.gamma > 0.0 ? sd.gamma : sd.h_norm);
    double max_im = -std::numeric_limits<double>::infinity();
    for (std::size_t k : populated) max_im = std::max(max_im, sd.eigenvalues[k].imag());
    for (std::size_t k : populated) {
        if (sd.eigenvalues[k].imag() >= max_im - tol) out.slow_modes.push_back(k);
    }

    double re_min = std::numeric_limits<double>::infinity();
    double re_max = -std::numeric_limits<double>::infinity();
    for (std::size_t k : out.slow_modes) {
        re_min = std::min(re_min, sd.eigenvalues[k].real());
        re_max = std::max(re_max, sd.eigenvalues[k].real());
    }
    if (re_max - re_min <= tol) {
        out.cls = MixClass::unconventional;
        CVector combo(sd.dim, Complex(0.0, 0.0));
        for (std::size_t k : out.slow_modes) {
            for (std::size_t j = 0; j < sd.dim; ++j) combo[j] += mc.c[k] * sd.right[k][j];
        }
        RVector p(sd.dim);
        kernels::abs2(sd.dim, combo.data(), p.data());
        const double total = std::accumulate(p.begin(), p.end(), 0.0);
        if (!(total > 0.0)) {
            throw DegenerateInputError("stationary_distribution: slow-mode combination vanishes");
        }
        for (double& x : p) x /= total;
        out.p_st = std::move(p);
    } else {
        out.cls = MixClass::non_mixing;
    }
    return out;
}

RVector distance_series(const dynamics::Trajectory& traj, const RVector& p_st) {
    RVector d;
    d.reserve(traj.times.size());
    for (const RVector& row : traj.p_norm) {
        if (row.empty()) break; // underflowed; distance undefined from here on
        if (row.size() != p_st.size()) {
            throw ParameterError("distance_series: distribution size mismatch");
        }
        d.push_back(kernels::l1_distance(row.size(), row.data(), p_st.data()));
    }
    return d;
}

namespace {

// Bisection on the linear interpolant between (t0,d0) and (t1,d1) for the
// epsilon crossing; d0 > eps >= d1.
double refine_crossing(double t0, double d0, double t1, double d1, double eps, double tol) {
    double lo = t0;
    double hi = t1;
    auto interp = [&](double t) { return d0 + (d1 - d0) * (t - t0) / (t1 - t0); };
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (interp(mid) > eps) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace

MixTimeResult mixing_time(const dynamics::Trajectory& traj, const RVector& p_st, double epsilon,
                          double time_tol) {
    if (!(epsilon > 0.0)) throw ParameterError("mixing_time: epsilon must be positive");
    const RVector d = distance_series(traj, p_st);
    if (d.empty()) throw ParameterError("mixing_time: empty distance series");
    const RVector& t = traj.times;

    MixTimeResult out;

    // Literal first crossing (diagnostic).
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d[i] <= epsilon) {
            out.first_crossing = (i == 0)
                                     ? t.front()
                                     : refine_crossing(t[i - 1], d[i - 1], t[i], d[i], epsilon,
                                                       time_tol);
            break;
        }
    }

    // Last crossing: smallest time after which the distance stays down.
    std::size_t last_bad = d.size(); // sentinel: none
    for (std::size_t i = d.size(); i-- > 0;) {
        if (d[i] > epsilon) {
            last_bad = i;
            break;
        }
    }
    if (last_bad == d.size()) {
        out.status = MixTimeStatus::ok;
        out.t_mix = t.front();
        return out;
    }
    if (last_bad + 1 >= d.size()) {
        // Still above epsilon at the horizon: decide whether more time
        // would plausibly help by the trend over the final tenth.
        const double span = t[d.size() - 1] - t.front();
        const double window_start = t[d.size() - 1] - 0.1 * span;
        double first_half = 0.0, second_half = 0.0;
        std::size_t n1 = 0, n2 = 0;
        const double window_mid = t[d.size() - 1] - 0.05 * span;
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (t[i] < window_start) continue;
            if (t[i] < window_mid) {
                first_half += d[i];
                ++n1;
            } else {
                second_half += d[i];
                ++n2;
            }
        }
        const bool decreasing =
            (n1 > 0 && n2 > 0) && (second_half / n2 < (first_half / n1) * (1.0 - 1e-3));
        out.status = decreasing ? MixTimeStatus::horizon_too_short : MixTimeStatus::no_convergence;
        return out;
    }

    out.status = MixTimeStatus::ok;
    out.t_mix = refine_crossing(t[last_bad], d[last_bad], t[last_bad + 1], d[last_bad + 1], epsilon,
                                time_tol);
    return out;
}

TrajectoryClass classify_from_trajectory(const dynamics::Trajectory& traj, double tol) {
    // Once the total probability has collapsed ~28 orders of magnitude the
    // normalized distribution is a quotient of roundoff: any dark
    // component seeded at machine precision (~1e-16 amplitude) dominates
    // the true signal there. Classification uses only the range where the
    // distribution still carries information.
    const double floor = traj.p_total.empty() ? 0.0 : traj.p_total.front() * 1e-28;
    std::size_t usable = 0;
    while (usable < traj.p_norm.size() && !traj.p_norm[usable].empty() &&
           traj.p_total[usable] >= floor) {
        ++usable;
    }
    if (usable < 4) throw ParameterError("classify_from_trajectory: trajectory too short");

    const double t_end = traj.times[usable - 1];
    const double t_start = traj.times.front();
    const double window_start = t_end - 0.2 * (t_end - t_start);

    const std::size_t n = traj.p_norm.front().size();
    RVector mean(n, 0.0);
    std::size_t count = 0;
    for (std::size_t i = 0; i < usable; ++i) {
        if (traj.times[i] < window_start) continue;
        for (std::size_t j = 0; j < n; ++j) mean[j] += traj.p_norm[i][j];
        ++count;
    }
    if (count == 0) throw ParameterError("classify_from_trajectory: empty tail window");
    for (double& x : mean) x /= static_cast<double>(count);

    double osc = 0.0;
    for (std::size_t i = 0; i < usable; ++i) {
        if (traj.times[i] < window_start) continue;
        osc = std::max(osc, kernels::l1_distance(n, traj.p_norm[i].data(), mean.data()));
    }

    TrajectoryClass out;
    out.p_limit = std::move(mean);
    out.oscillation = osc;
    out.mixes = osc <= tol;
    return out;
}

StateRule first_node_rule() {
    return [](const lattice::LatticeSpec& s) { return initstate::basis_excitation(s, 1); };
}

StateRule middle_node_rule() {
    return [](const lattice::LatticeSpec& s) {
        return initstate::basis_excitation(s, initstate::middle_lossless_node(s));
    };
}

StateRule lossless_node_rule(std::size_t m) {
    return [m](const lattice::LatticeSpec& s) {
        return initstate::basis_excitation(s, 2 * m - 1);
    };
}

MixReport mixing_report(const lattice::LatticeSpec& spec, const dynamics::AmplitudeState& state0,
                        double epsilon, const RunOptions& opt) {
    if (!(epsilon > 0.0)) throw ParameterError("mixing_report: epsilon must be positive");
    const lattice::Hamiltonian h = lattice::build(spec);
    if (state0.psi.size() != h.dim) {
        throw ParameterError("mixing_report: state dimension does not match the lattice");
    }
    const double gamma = spec.params.gamma;
    const spectral::SpectralData sd = spectral::eigensolve(h);

    MixReport report;
    report.epsilon = epsilon;
    report.spectral_path = sd.eigbasis_condition < dynamics::kConditionGate;

    // Dark overlap straight from the kernel vector; well defined even at
    // exceptional points where the full decomposition is not.
    std::optional<CVector> dark_vec;
    try {
        dark_vec = initstate::dark_state(spec).psi;
    } catch (const NoDarkStateError&) {
        dark_vec = std::nullopt;
    }
    double direct_dark_overlap = 0.0;
    if (dark_vec) {
        const Complex q = spectral::bilinear(*dark_vec, *dark_vec);
        direct_dark_overlap = std::abs(spectral::bilinear(*dark_vec, state0.psi) / q);
    }

    std::optional<StationaryResult> st;
    if (report.spectral_path) {
        const dynamics::ModeCoefficients mc = dynamics::decompose(state0, sd);
        report.max_coeff = mc.max_abs;
        st = stationary_distribution(sd, mc);
        report.cls = st->cls;
        report.p_stationary = st->p_st;
        report.slow_modes = st->slow_modes;
        report.dark_overlap_abs = st->dark_overlap_abs;
        report.coeff_norm = st->coeff_norm;
        report.dark_overlap_rel = st->dark_overlap_abs / st->coeff_norm;
        report.ambiguous_dark_overlap = st->ambiguous;
    } else {
        // Integrator fallback at or near an exceptional point. The dark
        // projection still classifies the conventional branch; the
        // orthogonal branch is classified from the trajectory below.
        double psi_norm = std::sqrt(kernels::sum_abs2(state0.psi.size(), state0.psi.data()));
        report.dark_overlap_abs = direct_dark_overlap;
        report.coeff_norm = psi_norm;
        report.dark_overlap_rel = direct_dark_overlap / psi_norm;
        report.ambiguous_dark_overlap =
            report.dark_overlap_rel >= kAmbiguousLow && report.dark_overlap_rel <= kAmbiguousHigh;
        if (dark_vec && report.dark_overlap_rel > kDarkThreshold) {
            report.cls = MixClass::conventional;
            RVector p(h.dim);
            kernels::abs2(h.dim, dark_vec->data(), p.data());
            const double total = std::accumulate(p.begin(), p.end(), 0.0);
            RVector pst(p);
            for (double& x : pst) x /= total;
            report.p_stationary = std::move(pst);
        }
        // Other classes resolved after the first propagation.
    }

    const double dt = opt.dt > 0.0 ? opt.dt : 0.01 / gamma;
    double t_max = opt.t_max > 0.0 ? opt.t_max : dynamics::default_t_max(h.dim, gamma);
    const dynamics::EvolveOptions evolve_opt{/*store_states=*/false};

    dynamics::Trajectory traj;
    bool trajectory_classified = false;
    for (int ext = 0;; ++ext) {
        const RVector times = dynamics::uniform_times(state0.t, state0.t + t_max, dt);
        traj = dynamics::evolve_auto(state0, h, sd, times, evolve_opt);

        if (!report.spectral_path && !report.p_stationary && !trajectory_classified) {
            const TrajectoryClass tc = classify_from_trajectory(traj, epsilon);
            report.tail_oscillation = tc.oscillation;
            trajectory_classified = true;
            if (tc.mixes) {
                report.cls = MixClass::unconventional;
                report.p_stationary = tc.p_limit;
            } else {
                report.cls = MixClass::non_mixing;
            }
        }

        if (report.spectral_path && st && st->cls == MixClass::unconventional &&
            st->slow_modes.size() > 1) {
            // Degenerate slow set: the limit is measured from the tail
            // average and cross-checked against the slow-mode prediction.
            const TrajectoryClass tc = classify_from_trajectory(traj, epsilon);
            report.tail_oscillation = tc.oscillation;
            if (report.p_stationary) {
                report.unconventional_crosscheck = kernels::l1_distance(
                    tc.p_limit.size(), tc.p_limit.data(), report.p_stationary->data());
            }
            report.p_stationary = tc.p_limit;
        }

        if (report.cls == MixClass::non_mixing || !report.p_stationary) {
            report.status = MixTimeStatus::no_convergence;
            break;
        }

        const MixTimeResult mt =
            mixing_time(traj, *report.p_stationary, epsilon, 1e-4 / gamma);
        report.status = mt.status;
        report.first_crossing = mt.first_crossing;
        if (mt.status == MixTimeStatus::ok) {
            report.t_mix = mt.t_mix;
            report.horizon_extensions = ext;
            break;
        }
        if (mt.status == MixTimeStatus::horizon_too_short && ext < opt.max_extensions) {
            t_max *= 2.0;
            continue;
        }
        report.horizon_extensions = ext;
        if (mt.status == MixTimeStatus::horizon_too_short) {
            throw HorizonTooShortError(
                "mixing_report: distance still above epsilon after extending the horizon to " +
                std::to_string(t_max) + " (64x limit reached)");
        }
        break;
    }

    if (report.cls != MixClass::non_mixing && report.p_stationary) {
        report.distance_times = traj.times;
        report.distance_series = distance_series(traj, *report.p_stationary);
        report.distance_times.resize(report.distance_series.size());
    }
    return report;
}

namespace {

ScalingFit fit_line(const RVector& x, const RVector& y) {
    ScalingFit fit;
    if (x.size() < 3) return fit;
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-300) return fit;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (fit.intercept + fit.slope * x[i]);
        rss += r * r;
    }
    fit.residual = std::sqrt(rss / n);
    fit.available = true;
    return fit;
}

} // namespace

ScalingStudy scaling_study(const lattice::LatticeSpec& family, const std::vector<std::size_t>& sizes,
                           const StateRule& rule, double epsilon, const RunOptions& opt,
                           std::size_t parallelism) {
    if (family.topology == lattice::Topology::dbs) {
        throw ParameterError("scaling_study needs a linear or ring family");
    }
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
        if (!(sizes[i] < sizes[i + 1])) throw ParameterError("scaling_study: sizes must be ascending");
    }

    ScalingStudy study;
    const double gamma = family.params.gamma;
    study.points.resize(sizes.size());
    parallel_for(sizes.size(), parallelism, [&](std::size_t i) {
        const std::size_t nl = sizes[i];
        lattice::LatticeSpec s = family;
        s.n_lossy = nl;
        if (s.topology == lattice::Topology::ring) {
            s.delta = lattice::balanced_delta(s.params, nl);
        }
        const dynamics::AmplitudeState state0 = rule(s);
        const MixReport rep = mixing_report(s, state0, epsilon, opt);
        if (!rep.t_mix) {
            throw HorizonTooShortError("scaling_study: no mixing time at n_lossy = " +
                                       std::to_string(nl));
        }

        // v/gamma sits below the size-dependent LREP exactly when some
        // nonzero mode still decays slower than gamma/2.
        const CVector values = spectral::eigenvalues_only(lattice::build(s));
        RVector abs_im(values.size());
        for (std::size_t k = 0; k < values.size(); ++k) abs_im[k] = std::abs(values[k].imag());
        std::sort(abs_im.begin(), abs_im.end());
        const bool post = abs_im[1] < 0.5 * gamma * (1.0 - 1e-9);

        study.points[i] = ScalingPoint{nl, *rep.t_mix, post};
    });

    RVector post_x, post_y, pre_x, pre_y;
    for (const ScalingPoint& p : study.points) {
        if (p.post_lrep) {
            post_x.push_back(std::log(static_cast<double>(p.n_lossy)));
            post_y.push_back(std::log(p.t_mix));
        } else {
            pre_x.push_back(std::log(static_cast<double>(p.n_lossy)));
            pre_y.push_back(p.t_mix);
        }
    }
    study.post_fit = fit_line(post_x, post_y);
    study.pre_fit = fit_line(pre_x, pre_y);
    return study;
}

} // namespace rlmix::mixing
