#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rlmix/lattice.hpp"

namespace rlmix::config {

struct InitialStateConfig {
    std::optional<std::size_t> node;        // 1-based basis excitation
    bool middle = false;                    // middle lossless node of a chain
    std::optional<std::string> recipe_file; // CSV node_index,re_amp,im_amp
    bool dark = false;
};

struct RunConfig {
    double epsilon = 1e-3;
    double t_max = 0.0; // 0: automatic horizon
    double dt = 0.0;    // 0: 0.01/gamma
    int max_extensions = 6;
};

struct SweepConfig {
    std::string parameter; // v_over_gamma | phi | n_lossy
    double from = 0.0;
    double to = 0.0;
    std::size_t steps = 0;
};

struct RecipeConfig {
    std::size_t kill_slowest = 0;          // kill the m slowest non-dark modes
    std::vector<std::size_t> kill_modes;   // explicit mode indices (overrides)
    std::vector<std::size_t> support;      // 1-based nodes; empty: centered default
};

struct OutputConfig {
    std::string dir;    // empty: $RLMIX_OUT_DIR or "."
    std::string prefix = "run";
    bool plot = false;
    bool raw_amplitudes = false;
};

struct ExperimentConfig {
    // lattice block
    std::string topology = "dbs";
    std::size_t n_lossy = 1;
    double v = 1.0;
    double phi = 0.7853981633974483; // pi/4
    double gamma = 1.0;
    std::optional<double> delta; // nullopt: "balanced"

    InitialStateConfig initial_state;
    RunConfig run;
    std::optional<SweepConfig> sweep;
    RecipeConfig recipe;
    OutputConfig output;
    std::size_t parallelism = 0; // 0: hardware concurrency

    // Validated LatticeSpec (resolves "balanced" delta).
    lattice::LatticeSpec spec() const;
};

// Parses a JSON config, rejecting unknown keys and invalid combinations
// with line-oriented diagnostics. Throws ConfigError.
ExperimentConfig parse(const std::string& json_text);

// Loads a file and applies --set key=value overrides (dotted paths,
// values parsed as JSON scalars).
ExperimentConfig load(const std::string& path, const std::vector<std::string>& overrides);

ExperimentConfig parse_with_overrides(const std::string& json_text,
                                      const std::vector<std::string>& overrides);

std::string serialize(const ExperimentConfig& cfg);

} // namespace rlmix::config
