#pragma once

// Internal helpers shared by the command implementations; not installed.

#include <string>
#include <vector>

#include "rlmix/config.hpp"
#include "rlmix/dynamics.hpp"
#include "rlmix/mixing.hpp"
#include "rlmix/spectral.hpp"
#include "rlmix/types.hpp"

namespace rlmix::commands::detail {

RVector linspace(double from, double to, std::size_t steps);
std::vector<std::size_t> integer_range(double from, double to, std::size_t steps);
std::string join_path(const std::string& dir, const std::string& name);
void write_text(const std::string& path, const std::string& text);

mixing::RunOptions run_options(const config::ExperimentConfig& cfg);

std::string spectrum_csv(const lattice::LatticeSpec& family, const RVector& grid,
                         std::size_t parallelism);
std::string ep_csv(const spectral::EpScan& scan);
std::string mixreport_csv(const mixing::MixReport& rep, std::size_t dim);
std::string trajectory_csv(const dynamics::Trajectory& traj);
std::string amplitudes_csv(const dynamics::Trajectory& traj);
std::string scaling_csv(const mixing::ScalingStudy& study, double gamma);
void plot_branches(const std::string& path, const spectral::EpScan& scan);

} // namespace rlmix::commands::detail
