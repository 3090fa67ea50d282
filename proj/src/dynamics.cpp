#include "rlmix/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rlmix/errors.hpp"
#include "rlmix/kernels.hpp"

namespace rlmix::dynamics {

namespace {

void check_state(const AmplitudeState& s) {
    if (s.psi.empty()) throw ParameterError("amplitude state is empty");
    for (const Complex& z : s.psi) {
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
            throw ParameterError("amplitude state has non-finite entries");
        }
    }
}

void check_times(const RVector& times) {
    if (times.empty()) throw ParameterError("time grid is empty");
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
        if (!(times[i] < times[i + 1])) {
            throw ParameterError("time grid must be strictly increasing");
        }
    }
}

void record_sample(Trajectory& traj, double t, const CVector& psi, const EvolveOptions& opt) {
    const std::size_t n = psi.size();
    traj.times.push_back(t);
    if (opt.store_states) traj.states.push_back(psi);
    const double p = kernels::sum_abs2(n, psi.data());
    traj.p_total.push_back(p);
    if (p >= kProbabilityFloor) {
        RVector row(n);
        kernels::abs2(n, psi.data(), row.data());
        for (double& x : row) x /= p;
        traj.p_norm.push_back(std::move(row));
    } else {
        traj.p_norm.emplace_back();
    }
}

// y = -i (H x)
void apply_rhs(const lattice::Hamiltonian& h, const CVector& x, CVector& y) {
    kernels::cmatvec(h.dim, h.entries.data(), x.data(), y.data());
    for (Complex& z : y) z = Complex(z.imag(), -z.real());
}

} // namespace

ModeCoefficients decompose(const AmplitudeState& state0, const spectral::SpectralData& sd) {
    check_state(state0);
    if (state0.psi.size() != sd.dim) {
        throw ParameterError("decompose: state dimension does not match the spectrum");
    }
    if (!(sd.eigbasis_condition < kConditionGate)) {
        std::ostringstream msg;
        msg << "decompose: eigenbasis condition " << sd.eigbasis_condition
            << " exceeds the gate " << kConditionGate
            << " (defective or near-defective basis); use evolve_integrate";
        throw ConditioningError(msg.str());
    }
    ModeCoefficients mc;
    mc.c.resize(sd.dim);
    for (std::size_t k = 0; k < sd.dim; ++k) {
        mc.c[k] = spectral::bilinear(sd.left[k], state0.psi);
        mc.max_abs = std::max(mc.max_abs, std::abs(mc.c[k]));
    }
    return mc;
}

Trajectory evolve_spectral(const AmplitudeState& state0, const spectral::SpectralData& sd,
                           const RVector& times, const EvolveOptions& opt) {
    check_times(times);
    const ModeCoefficients mc = decompose(state0, sd);
    const std::size_t n = sd.dim;

    // Basis matrix with mode k in column k, row-major for the matvec kernel.
    CVector basis(n * n);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t j = 0; j < n; ++j) {
            basis[j * n + k] = sd.right[k][j];
        }
    }

    Trajectory traj;
    CVector weights(n);
    CVector psi(n);
    for (double t : times) {
        const double dtau = t - state0.t;
        for (std::size_t k = 0; k < n; ++k) {
            const Complex lam = sd.eigenvalues[k];
            // exp(-i lambda dtau) = exp(Im(lambda) dtau) * e^{-i Re(lambda) dtau}
            weights[k] = mc.c[k] * std::exp(Complex(lam.imag() * dtau, -lam.real() * dtau));
        }
        kernels::cmatvec(n, basis.data(), weights.data(), psi.data());
        record_sample(traj, t, psi, opt);
    }
    return traj;
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double kA21 = 1.0 / 5.0;
constexpr double kA31 = 3.0 / 40.0, kA32 = 9.0 / 40.0;
constexpr double kA41 = 44.0 / 45.0, kA42 = -56.0 / 15.0, kA43 = 32.0 / 9.0;
constexpr double kA51 = 19372.0 / 6561.0, kA52 = -25360.0 / 2187.0, kA53 = 64448.0 / 6561.0,
                 kA54 = -212.0 / 729.0;
constexpr double kA61 = 9017.0 / 3168.0, kA62 = -355.0 / 33.0, kA63 = 46732.0 / 5247.0,
                 kA64 = 49.0 / 176.0, kA65 = -5103.0 / 18656.0;
constexpr double kB1 = 35.0 / 384.0, kB3 = 500.0 / 1113.0, kB4 = 125.0 / 192.0,
                 kB5 = -2187.0 / 6784.0, kB6 = 11.0 / 84.0;
// b - b* (5th-order weights minus the embedded 4th-order ones).
constexpr double kE1 = 71.0 / 57600.0, kE3 = -71.0 / 16695.0, kE4 = 71.0 / 1920.0,
                 kE5 = -17253.0 / 339200.0, kE6 = 22.0 / 525.0, kE7 = -1.0 / 40.0;

constexpr double kRelTol = 1e-10;
// Absolute floor relative to the current state norm: the amplitudes decay
// through hundreds of orders of magnitude and a fixed floor would stop
// resolving the state once it drops below it.
constexpr double kFloorTol = 1e-14;

class Dopri5 {
public:
    Dopri5(const lattice::Hamiltonian& h, const AmplitudeState& state0)
        : h_(h), n_(h.dim), t_(state0.t), y_(state0.psi) {
        for (auto* k : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_}) k->resize(n_);
        tmp_.resize(n_);
        err_.resize(n_);
        apply_rhs(h_, y_, k1_);
        h_step_ = initial_step();
    }

    const CVector& state() const { return y_; }

    // Advances to exactly t_target.
    void advance_to(double t_target) {
        while (t_ < t_target) {
            double h_try = std::min(h_step_, t_target - t_);
            for (;;) {
                if (h_try < 1e-14 * std::max(1.0, std::abs(t_))) {
                    throw StiffnessError(
                        "evolve_integrate: step size underflow at t = " + std::to_string(t_));
                }
                const double err = try_step(h_try);
                if (err <= 1.0) {
                    t_ += h_try;
                    y_.swap(tmp_);
                    k1_.swap(k7_); // FSAL
                    const double grow = 0.9 * std::pow(std::max(err, 1e-20), -0.2);
                    h_step_ = h_try * std::clamp(grow, 0.2, 5.0);
                    break;
                }
                h_try *= std::clamp(0.9 * std::pow(err, -0.2), 0.2, 0.9);
            }
        }
    }

private:
    double initial_step() const {
        const double ynorm = std::sqrt(kernels::sum_abs2(n_, y_.data()));
        const double fnorm = std::sqrt(kernels::sum_abs2(n_, k1_.data()));
        if (fnorm < 1e-30) return 1e-2;
        return std::min(1e-2, 1e-2 * std::max(ynorm, 1.0) / fnorm);
    }

    // One trial step of size h; returns the scaled error norm and leaves
    // the candidate state in tmp_ and its derivative in k7_.
    double try_step(double h) {
        auto combine = [&](std::initializer_list<std::pair<double, const CVector*>> terms) {
            tmp_ = y_;
            for (const auto& [w, k] : terms) {
                kernels::caxpy(n_, Complex(h * w, 0.0), k->data(), tmp_.data());
            }
        };
        combine({{kA21, &k1_}});
        apply_rhs(h_, tmp_, k2_);
        combine({{kA31, &k1_}, {kA32, &k2_}});
        apply_rhs(h_, tmp_, k3_);
        combine({{kA41, &k1_}, {kA42, &k2_}, {kA43, &k3_}});
        apply_rhs(h_, tmp_, k4_);
        combine({{kA51, &k1_}, {kA52, &k2_}, {kA53, &k3_}, {kA54, &k4_}});
        apply_rhs(h_, tmp_, k5_);
        combine({{kA61, &k1_}, {kA62, &k2_}, {kA63, &k3_}, {kA64, &k4_}, {kA65, &k5_}});
        apply_rhs(h_, tmp_, k6_);
        combine({{kB1, &k1_}, {kB3, &k3_}, {kB4, &k4_}, {kB5, &k5_}, {kB6, &k6_}});
        apply_rhs(h_, tmp_, k7_);

        std::fill(err_.begin(), err_.end(), Complex(0.0, 0.0));
        kernels::caxpy(n_, Complex(h * kE1, 0.0), k1_.data(), err_.data());
        kernels::caxpy(n_, Complex(h * kE3, 0.0), k3_.data(), err_.data());
        kernels::caxpy(n_, Complex(h * kE4, 0.0), k4_.data(), err_.data());
        kernels::caxpy(n_, Complex(h * kE5, 0.0), k5_.data(), err_.data());
        kernels::caxpy(n_, Complex(h * kE6, 0.0), k6_.data(), err_.data());
        kernels::caxpy(n_, Complex(h * kE7, 0.0), k7_.data(), err_.data());

        double ymax = 1e-300;
        for (std::size_t i = 0; i < n_; ++i) {
            ymax = std::max({ymax, std::abs(y_[i]), std::abs(tmp_[i])});
        }
        double acc = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            const double scale =
                kFloorTol * ymax + kRelTol * std::max(std::abs(y_[i]), std::abs(tmp_[i]));
            const double e = std::abs(err_[i]) / scale;
            acc += e * e;
        }
        return std::sqrt(acc / static_cast<double>(n_));
    }

    const lattice::Hamiltonian& h_;
    std::size_t n_;
    double t_;
    double h_step_;
    CVector y_, tmp_, err_;
    CVector k1_, k2_, k3_, k4_, k5_, k6_, k7_;
};

} // namespace

Trajectory evolve_integrate(const AmplitudeState& state0, const lattice::Hamiltonian& h,
                            const RVector& times, const EvolveOptions& opt) {
    check_state(state0);
    check_times(times);
    if (state0.psi.size() != h.dim) {
        throw ParameterError("evolve_integrate: state dimension does not match the Hamiltonian");
    }
    if (times.front() < state0.t - 1e-12 * std::max(1.0, std::abs(state0.t))) {
        throw ParameterError("evolve_integrate: requested times precede the initial state");
    }

    Trajectory traj;
    Dopri5 stepper(h, state0);
    for (double t : times) {
        if (t <= state0.t) {
            record_sample(traj, t, state0.psi, opt);
            continue;
        }
        stepper.advance_to(t);
        record_sample(traj, t, stepper.state(), opt);
    }
    return traj;
}

Trajectory evolve_auto(const AmplitudeState& state0, const lattice::Hamiltonian& h,
                       const spectral::SpectralData& sd, const RVector& times,
                       const EvolveOptions& opt) {
    if (sd.eigbasis_condition < kConditionGate) {
        return evolve_spectral(state0, sd, times, opt);
    }
    return evolve_integrate(state0, h, times, opt);
}

DbsAnalytic::DbsAnalytic(const lattice::CouplingParams& params, const AmplitudeState& state0) {
    const lattice::CouplingParams p =
        lattice::CouplingParams::make(params.v, params.phi, params.gamma);
    check_state(state0);
    if (state0.psi.size() != 3) {
        throw PreconditionError("dbs_analytic needs a three-node state");
    }
    t0_ = state0.t;
    phi_ = p.phi;
    v_ = p.v;
    gamma_ = p.gamma;

    const Complex disc = std::sqrt(Complex(p.gamma * p.gamma - 4.0 * p.v * p.v, 0.0));
    lambda_plus_ = Complex(0.0, -0.5) * (p.gamma + disc);
    lambda_minus_ = Complex(0.0, -0.5) * (p.gamma - disc);
    const Complex split = lambda_minus_ - lambda_plus_;
    if (std::abs(split) < 1e-9 * p.gamma) {
        throw SingularParameterError(
            "dbs_analytic is singular at the exceptional point v/gamma = 1/2; "
            "use evolve_integrate");
    }

    const auto [bright, dark] = collective_coords(state0, p);
    alpha_dark_ = dark;
    const Complex beta0 = state0.psi[1];
    const Complex igamma(0.0, p.gamma);
    c_plus_ = (-p.v * bright + (igamma + lambda_minus_) * beta0) / split;
    c_minus_ = (-p.v * bright + (igamma + lambda_plus_) * beta0) / split;
}

AmplitudeState DbsAnalytic::eval(double t) const {
    const double dtau = t - t0_;
    const Complex ep = std::exp(Complex(0.0, -1.0) * lambda_plus_ * dtau);
    const Complex em = std::exp(Complex(0.0, -1.0) * lambda_minus_ * dtau);
    const Complex beta1 = c_plus_ * ep - c_minus_ * em;
    // A = (i/v) (beta1' + gamma beta1) with beta1' evaluated termwise.
    const Complex i_unit(0.0, 1.0);
    const Complex bright = (i_unit / v_) * (c_plus_ * (gamma_ - i_unit * lambda_plus_) * ep -
                                            c_minus_ * (gamma_ - i_unit * lambda_minus_) * em);
    AmplitudeState out;
    out.t = t;
    out.psi = {bright * std::cos(phi_) - alpha_dark_ * std::sin(phi_), beta1,
               bright * std::sin(phi_) + alpha_dark_ * std::cos(phi_)};
    return out;
}

DbsAnalytic dbs_analytic(const lattice::CouplingParams& params, const AmplitudeState& state0) {
    return DbsAnalytic(params, state0);
}

std::pair<Complex, Complex> collective_coords(const AmplitudeState& state,
                                              const lattice::CouplingParams& params) {
    if (state.psi.size() != 3) {
        throw PreconditionError("collective_coords is defined for the three-node lattice only");
    }
    const double c = std::cos(params.phi);
    const double s = std::sin(params.phi);
    const Complex a1 = state.psi[0];
    const Complex a2 = state.psi[2];
    return {a1 * c + a2 * s, a2 * c - a1 * s};
}

RVector uniform_times(double t0, double t1, double dt) {
    if (!(dt > 0.0)) throw ParameterError("uniform_times: dt must be positive");
    if (!(t1 > t0)) throw ParameterError("uniform_times: t1 must exceed t0");
    const long long n = std::max(1LL, std::llround((t1 - t0) / dt));
    RVector times(static_cast<std::size_t>(n) + 1);
    for (long long i = 0; i <= n; ++i) {
        times[static_cast<std::size_t>(i)] = t0 + static_cast<double>(i) * dt;
    }
    return times;
}

double default_t_max(std::size_t dim, double gamma) {
    return std::max(50.0, 20.0 * static_cast<double>(dim)) / gamma;
}

} // namespace rlmix::dynamics
