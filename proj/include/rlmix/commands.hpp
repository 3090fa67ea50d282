#pragma once

#include <string>
#include <vector>

#include "rlmix/config.hpp"
#include "rlmix/dynamics.hpp"

namespace rlmix::commands {

struct CommandResult {
    std::vector<std::string> files;    // paths written
    std::vector<std::string> notes;    // one-line summaries for stdout
    std::vector<std::string> warnings; // surfaced on stderr
};

// Resolves the output directory: config value, else $RLMIX_OUT_DIR,
// else the working directory. Creates it.
std::string resolve_out_dir(const config::OutputConfig& out);

// Builds the configured initial state (basis node, middle node, recipe
// file, or dark state). Appends a warning when a lossy node is excited.
dynamics::AmplitudeState initial_state(const config::ExperimentConfig& cfg,
                                       const lattice::LatticeSpec& spec,
                                       std::vector<std::string>* warnings);

CommandResult cmd_spectrum(const config::ExperimentConfig& cfg);
CommandResult cmd_ep_scan(const config::ExperimentConfig& cfg);
CommandResult cmd_mix(const config::ExperimentConfig& cfg);
CommandResult cmd_scaling(const config::ExperimentConfig& cfg);
CommandResult cmd_recipe(const config::ExperimentConfig& cfg);

// Preset study bundles, one per figure id.
CommandResult cmd_reproduce(const std::string& figure_id, const config::ExperimentConfig& base);
const std::vector<std::string>& reproduce_ids();

// CLI exit code for an error: 2 parameters/config, 3 numerical,
// 4 horizon/infeasibility.
int exit_code_for(const std::exception& e);
const char* error_category(const std::exception& e);

} // namespace rlmix::commands
