#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "rlmix/lattice.hpp"
#include "rlmix/spectral.hpp"
#include "rlmix/types.hpp"

namespace rlmix::dynamics {

// Amplitude vector over all nodes at one time, in the interleaved wire
// order of the lattice module. Times are in units of 1/gamma when the
// Hamiltonian uses gamma = 1.
struct AmplitudeState {
    double t = 0.0;
    CVector psi;
};

struct Trajectory {
    RVector times;                  // strictly increasing
    std::vector<CVector> states;    // empty when state storage is disabled
    RVector p_total;                // sum_j |psi_j|^2 per time
    std::vector<RVector> p_norm;    // normalized distribution; row empty on underflow
};

// Per-mode coefficients c_k = bilinear(left_k, psi0) in the biorthogonal
// basis; max_abs is max |c_k|.
struct ModeCoefficients {
    CVector c;
    double max_abs = 0.0;
};

struct EvolveOptions {
    bool store_states = true;
};

// Eigenbasis conditioning above this gate means the spectral propagator
// and mode decomposition are unreliable (near an exceptional point); use
// the integrator instead.
inline constexpr double kConditionGate = 1e8;

// Below this total probability the normalized distribution is reported
// as absent.
inline constexpr double kProbabilityFloor = 1e-300;

ModeCoefficients decompose(const AmplitudeState& state0, const spectral::SpectralData& sd);

// psi(t) = sum_k c_k exp(-i lambda_k (t - t0)) phi_k on the given grid.
Trajectory evolve_spectral(const AmplitudeState& state0, const spectral::SpectralData& sd,
                           const RVector& times, const EvolveOptions& opt = {});

// Adaptive Dormand-Prince RK5(4) integration of d psi/dt = -i H psi with
// local relative tolerance 1e-10, stepping exactly onto every requested
// time. Valid at and beyond exceptional points.
Trajectory evolve_integrate(const AmplitudeState& state0, const lattice::Hamiltonian& h,
                            const RVector& times, const EvolveOptions& opt = {});

// Spectral propagation when the eigenbasis is well conditioned, the
// integrator otherwise.
Trajectory evolve_auto(const AmplitudeState& state0, const lattice::Hamiltonian& h,
                       const spectral::SpectralData& sd, const RVector& times,
                       const EvolveOptions& opt = {});

// Closed-form propagator of the three-node dissipative beam splitter in
// bright/dark collective coordinates. Throws away from validity: the
// expansion divides by lambda_minus - lambda_plus and fails at the
// exceptional point v/gamma = 1/2.
class DbsAnalytic {
public:
    DbsAnalytic(const lattice::CouplingParams& params, const AmplitudeState& state0);

    AmplitudeState eval(double t) const;

private:
    double t0_;
    double phi_;
    double v_;
    double gamma_;
    Complex lambda_plus_;
    Complex lambda_minus_;
    Complex c_plus_;
    Complex c_minus_;
    Complex alpha_dark_; // conserved dark amplitude
};

DbsAnalytic dbs_analytic(const lattice::CouplingParams& params, const AmplitudeState& state0);

// Bright/dark collective amplitudes of a three-node state:
// A = alpha1 cos(phi) + alpha2 sin(phi), alpha = alpha2 cos(phi) - alpha1 sin(phi).
std::pair<Complex, Complex> collective_coords(const AmplitudeState& state,
                                              const lattice::CouplingParams& params);

// Inclusive uniform grid t0, t0+dt, ..., t0+n*dt with n = round((t1-t0)/dt).
RVector uniform_times(double t0, double t1, double dt);

// Default horizon for open-ended runs: max(50, 20*dim)/gamma.
double default_t_max(std::size_t dim, double gamma);

} // namespace rlmix::dynamics
