#include <CLI11.hpp>

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "rlmix/commands.hpp"
#include "rlmix/config.hpp"
#include "rlmix/errors.hpp"
#include "rlmix/kernels.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    std::string prefix;
    bool plot = false;
    std::size_t parallelism = 0;
    bool parallelism_set = false;
};

void add_common(CLI::App* sub, CommonArgs& args, bool config_required) {
    auto* copt = sub->add_option("-c,--config", args.config_path, "JSON experiment config");
    if (config_required) copt->required();
    sub->add_option("--set", args.overrides, "override a config field, e.g. --set lattice.v=2.5");
    sub->add_option("--out", args.out_dir, "output directory (default: $RLMIX_OUT_DIR or .)");
    sub->add_option("--prefix", args.prefix, "output file prefix");
    sub->add_flag("--plot", args.plot, "also emit SVG line charts");
    sub->add_option("--parallelism", args.parallelism, "worker pool size (0 = cores)")
        ->each([&args](const std::string&) { args.parallelism_set = true; });
}

rlmix::config::ExperimentConfig load_config(const CommonArgs& args) {
    rlmix::config::ExperimentConfig cfg =
        args.config_path.empty()
            ? rlmix::config::parse_with_overrides("{}", args.overrides)
            : rlmix::config::load(args.config_path, args.overrides);
    if (!args.out_dir.empty()) cfg.output.dir = args.out_dir;
    if (!args.prefix.empty()) cfg.output.prefix = args.prefix;
    if (args.plot) cfg.output.plot = true;
    if (args.parallelism_set) cfg.parallelism = args.parallelism;
    return cfg;
}

void report(const rlmix::commands::CommandResult& result) {
    for (const std::string& w : result.warnings) std::cerr << "warning: " << w << "\n";
    for (const std::string& n : result.notes) std::cout << n << "\n";
    for (const std::string& f : result.files) std::cout << "wrote " << f << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mixing analysis for dissipative Rudner-Levitov lattices"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "rlmix 1.0");

    CommonArgs spectrum_args, epscan_args, mix_args, scaling_args, recipe_args, repro_args;
    std::string figure_id;

    auto* spectrum = app.add_subcommand("spectrum", "sweep v/gamma and emit the spectrum CSV");
    add_common(spectrum, spectrum_args, true);
    auto* epscan = app.add_subcommand("ep-scan", "locate exceptional points over a v/gamma grid");
    add_common(epscan, epscan_args, true);
    auto* mix = app.add_subcommand("mix", "mixing report for one lattice and initial state");
    add_common(mix, mix_args, true);
    auto* scaling = app.add_subcommand("scaling", "mixing time versus lattice size");
    add_common(scaling, scaling_args, true);
    auto* recipe = app.add_subcommand("recipe", "initial-state recipe orthogonal to slow modes");
    add_common(recipe, recipe_args, true);

    auto* repro = app.add_subcommand("reproduce", "run a preset study bundle");
    std::string known = "figure id:";
    for (const auto& id : rlmix::commands::reproduce_ids()) known += " " + id;
    repro->add_option("figure_id", figure_id, known)->required();
    add_common(repro, repro_args, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help / --version
        std::cerr << "error[config]: " << e.what() << "\n";
        return 2;
    }

    try {
        rlmix::commands::CommandResult result;
        if (spectrum->parsed()) {
            result = rlmix::commands::cmd_spectrum(load_config(spectrum_args));
        } else if (epscan->parsed()) {
            result = rlmix::commands::cmd_ep_scan(load_config(epscan_args));
        } else if (mix->parsed()) {
            result = rlmix::commands::cmd_mix(load_config(mix_args));
        } else if (scaling->parsed()) {
            result = rlmix::commands::cmd_scaling(load_config(scaling_args));
        } else if (recipe->parsed()) {
            result = rlmix::commands::cmd_recipe(load_config(recipe_args));
        } else if (repro->parsed()) {
            result = rlmix::commands::cmd_reproduce(figure_id, load_config(repro_args));
        }
        report(result);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error[" << rlmix::commands::error_category(e) << "]: " << e.what() << "\n";
        return rlmix::commands::exit_code_for(e);
    }
}
