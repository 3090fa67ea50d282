#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "rlmix/dynamics.hpp"
#include "rlmix/lattice.hpp"
#include "rlmix/spectral.hpp"
#include "rlmix/types.hpp"

namespace rlmix::mixing {

enum class MixClass { conventional, unconventional, non_mixing };

const char* mix_class_name(MixClass c);

struct StationaryResult {
    MixClass cls = MixClass::conventional;
    std::optional<RVector> p_st;         // absent for non-mixing
    std::vector<std::size_t> slow_modes; // modes setting the limit (orthogonal case)
    double dark_overlap_abs = 0.0;       // |c_dark|
    double coeff_norm = 0.0;             // ||c||_2
    bool ambiguous = false;              // |c_dark|/||c|| inside [1e-10, 1e-6]
};

// Classifies the limit of the normalized distribution from the mode
// coefficients: finite dark overlap means conventional mixing onto the
// dark distribution; otherwise the slowest populated modes decide
// between unconventional mixing and no mixing at all.
StationaryResult stationary_distribution(const spectral::SpectralData& sd,
                                         const dynamics::ModeCoefficients& mc);

enum class MixTimeStatus { ok, horizon_too_short, no_convergence };

struct MixTimeResult {
    MixTimeStatus status = MixTimeStatus::ok;
    std::optional<double> t_mix;          // last-crossing time
    std::optional<double> first_crossing; // literal first-crossing, diagnostic
};

// L1 distance sum_j |p_j(t) - p_st_j| per time, truncated where the
// normalized distribution underflowed.
RVector distance_series(const dynamics::Trajectory& traj, const RVector& p_st);

// Smallest grid time after which the distance stays <= epsilon through
// the horizon (last-crossing convention), refined between bracketing
// grid points by bisection on the interpolated distance to time_tol.
MixTimeResult mixing_time(const dynamics::Trajectory& traj, const RVector& p_st, double epsilon,
                          double time_tol = 1e-4);

struct TrajectoryClass {
    bool mixes = false;
    RVector p_limit;           // tail-window average distribution
    double oscillation = 0.0;  // max L1 deviation from the average in the tail
};

// Trajectory-based mixing detector: converged tail vs persistent
// oscillation over the final fifth of the horizon.
TrajectoryClass classify_from_trajectory(const dynamics::Trajectory& traj, double tol = 1e-3);

struct RunOptions {
    double t_max = 0.0;      // 0: max(50, 20 dim)/gamma
    double dt = 0.0;         // 0: 0.01/gamma
    int max_extensions = 6;  // horizon doublings (64x total)
};

struct MixReport {
    MixClass cls = MixClass::conventional;
    std::optional<RVector> p_stationary;
    std::optional<double> t_mix;
    double epsilon = 0.0;
    RVector distance_times;
    RVector distance_series;
    std::vector<std::size_t> slow_modes;
    double dark_overlap_abs = 0.0;
    double dark_overlap_rel = 0.0;
    double coeff_norm = 0.0;
    double max_coeff = 0.0;
    bool ambiguous_dark_overlap = false;
    std::optional<double> first_crossing;
    int horizon_extensions = 0;
    bool spectral_path = true;            // false: integrator fallback near an EP
    MixTimeStatus status = MixTimeStatus::ok;
    double tail_oscillation = 0.0;
    std::optional<double> unconventional_crosscheck; // L1(slow-mode prediction, tail average)
};

// Full pipeline: build, eigensolve, decompose (or integrator fallback),
// classify, evolve with automatic horizon doubling, and measure the
// mixing time.
MixReport mixing_report(const lattice::LatticeSpec& spec, const dynamics::AmplitudeState& state0,
                        double epsilon, const RunOptions& opt = {});

using StateRule = std::function<dynamics::AmplitudeState(const lattice::LatticeSpec&)>;

StateRule first_node_rule();
StateRule middle_node_rule();
// Unit excitation of the m-th lossless node (wire node 2m-1).
StateRule lossless_node_rule(std::size_t m);

struct ScalingFit {
    bool available = false;
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0; // RMS fit residual
};

struct ScalingPoint {
    std::size_t n_lossy = 0;
    double t_mix = 0.0;
    bool post_lrep = false; // v/gamma below the size-dependent LREP
};

struct ScalingStudy {
    std::vector<ScalingPoint> points;
    ScalingFit post_fit; // log T vs log NL on the post-LREP segment
    ScalingFit pre_fit;  // T vs log NL on the pre-LREP segment
};

// Mixing time versus lattice size with power-law and log fits on the
// two sides of the LREP crossing. Rings are rebalanced at every size.
// Sizes run on a bounded worker pool; results merge in size order.
ScalingStudy scaling_study(const lattice::LatticeSpec& family, const std::vector<std::size_t>& sizes,
                           const StateRule& rule, double epsilon, const RunOptions& opt = {},
                           std::size_t parallelism = 1);

} // namespace rlmix::mixing
