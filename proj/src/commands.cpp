#include "rlmix/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands_detail.hpp"
#include "rlmix/csv.hpp"
#include "rlmix/errors.hpp"
#include "rlmix/initstate.hpp"
#include "rlmix/kernels.hpp"
#include "rlmix/mixing.hpp"
#include "rlmix/parallel.hpp"
#include "rlmix/spectral.hpp"

namespace rlmix::commands {

namespace fs = std::filesystem;
using csv::Table;

namespace detail {

RVector linspace(double from, double to, std::size_t steps) {
    if (steps < 2) throw ConfigError("sweep needs at least 2 steps");
    if (!(to > from)) throw ConfigError("sweep range is empty");
    RVector grid(steps);
    for (std::size_t i = 0; i < steps; ++i) {
        grid[i] = from + (to - from) * static_cast<double>(i) / static_cast<double>(steps - 1);
    }
    return grid;
}

std::vector<std::size_t> integer_range(double from, double to, std::size_t steps) {
    const auto lo = static_cast<long long>(std::llround(from));
    const auto hi = static_cast<long long>(std::llround(to));
    if (lo < 1 || hi < lo) throw ConfigError("sweep: bad n_lossy range");
    std::vector<std::size_t> sizes;
    if (steps == 0 || steps >= static_cast<std::size_t>(hi - lo + 1)) {
        for (long long n = lo; n <= hi; ++n) sizes.push_back(static_cast<std::size_t>(n));
    } else {
        for (std::size_t i = 0; i < steps; ++i) {
            const double x = static_cast<double>(lo) +
                             (static_cast<double>(hi - lo)) * static_cast<double>(i) /
                                 static_cast<double>(steps - 1);
            const auto n = static_cast<std::size_t>(std::llround(x));
            if (sizes.empty() || sizes.back() != n) sizes.push_back(n);
        }
    }
    return sizes;
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParameterError("cannot write '" + path + "'");
    out << text;
}

mixing::RunOptions run_options(const config::ExperimentConfig& cfg) {
    mixing::RunOptions opt;
    opt.t_max = cfg.run.t_max;
    opt.dt = cfg.run.dt;
    opt.max_extensions = cfg.run.max_extensions;
    return opt;
}

std::string spectrum_csv(const lattice::LatticeSpec& family, const RVector& grid,
                         std::size_t parallelism) {
    const double gamma = family.params.gamma;
    std::vector<std::vector<std::vector<std::string>>> rows(grid.size());
    parallel_for(grid.size(), parallelism, [&](std::size_t i) {
        const spectral::SpectralData sd =
            spectral::eigensolve(spectral::build_at_ratio(family, grid[i]));
        rows[i].reserve(sd.dim);
        for (std::size_t k = 0; k < sd.dim; ++k) {
            rows[i].push_back({Table::cell(grid[i]), Table::cell(k),
                               Table::cell(sd.eigenvalues[k].real() / gamma),
                               Table::cell(sd.eigenvalues[k].imag() / gamma),
                               Table::cell(sd.residuals[k])});
        }
    });
    Table table({"v_over_gamma", "k", "re_lambda", "im_lambda", "residual"});
    for (auto& point : rows) {
        for (auto& r : point) table.row(std::move(r));
    }
    return table.str();
}

std::string ep_csv(const spectral::EpScan& scan) {
    Table table({"abscissa", "cluster_size", "kind"});
    for (const spectral::Coalescence& c : scan.coalescences) {
        table.row({Table::cell(c.abscissa), Table::cell(c.cluster_size),
                   spectral::degeneracy_kind_name(c.kind)});
    }
    return table.str();
}

std::string mixreport_csv(const mixing::MixReport& rep, std::size_t dim) {
    std::vector<std::string> header{"class", "t_mix", "epsilon", "dark_overlap"};
    for (std::size_t j = 1; j <= dim; ++j) header.push_back("p_st_" + std::to_string(j));
    Table table(std::move(header));
    std::vector<std::string> row{mixing::mix_class_name(rep.cls),
                                 rep.t_mix ? Table::cell(*rep.t_mix) : "",
                                 Table::cell(rep.epsilon), Table::cell(rep.dark_overlap_rel)};
    for (std::size_t j = 0; j < dim; ++j) {
        row.push_back(rep.p_stationary ? Table::cell((*rep.p_stationary)[j]) : "");
    }
    table.row(std::move(row));
    return table.str();
}

std::string trajectory_csv(const dynamics::Trajectory& traj) {
    const std::size_t n = traj.p_norm.empty() || traj.p_norm.front().empty()
                              ? 0
                              : traj.p_norm.front().size();
    std::vector<std::string> header{"t", "p_total"};
    for (std::size_t j = 1; j <= n; ++j) header.push_back("p_" + std::to_string(j));
    Table table(std::move(header));
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        std::vector<std::string> row{Table::cell(traj.times[i]), Table::cell(traj.p_total[i])};
        for (std::size_t j = 0; j < n; ++j) {
            row.push_back(traj.p_norm[i].empty() ? "" : Table::cell(traj.p_norm[i][j]));
        }
        table.row(std::move(row));
    }
    return table.str();
}

std::string amplitudes_csv(const dynamics::Trajectory& traj) {
    const std::size_t n = traj.states.empty() ? 0 : traj.states.front().size();
    std::vector<std::string> header{"t"};
    for (std::size_t j = 1; j <= n; ++j) {
        header.push_back("re_psi_" + std::to_string(j));
        header.push_back("im_psi_" + std::to_string(j));
    }
    Table table(std::move(header));
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        std::vector<std::string> row{Table::cell(traj.times[i])};
        for (std::size_t j = 0; j < n; ++j) {
            row.push_back(Table::cell(traj.states[i][j].real()));
            row.push_back(Table::cell(traj.states[i][j].imag()));
        }
        table.row(std::move(row));
    }
    return table.str();
}

std::string scaling_csv(const mixing::ScalingStudy& study, double gamma) {
    Table table({"n_lossy", "t_mix", "segment", "fit_exponent"});
    for (const mixing::ScalingPoint& p : study.points) {
        const mixing::ScalingFit& fit = p.post_lrep ? study.post_fit : study.pre_fit;
        table.row({Table::cell(p.n_lossy), Table::cell(p.t_mix * gamma),
                   p.post_lrep ? "post" : "pre", fit.available ? Table::cell(fit.slope) : ""});
    }
    return table.str();
}

void plot_branches(const std::string& path, const spectral::EpScan& scan) {
    std::vector<csv::Series> series;
    if (scan.im_branches.empty()) return;
    const std::size_t nb = scan.im_branches.front().size();
    for (std::size_t k = 0; k < nb; ++k) {
        csv::Series s;
        s.name = "Im l" + std::to_string(k);
        s.x = scan.grid;
        s.y.resize(scan.grid.size());
        for (std::size_t i = 0; i < scan.grid.size(); ++i) s.y[i] = scan.im_branches[i][k];
        series.push_back(std::move(s));
    }
    csv::write_line_chart(path, "decay-rate branches", "v/gamma", "Im(lambda)/gamma", series);
}

} // namespace detail

using namespace detail;

std::string resolve_out_dir(const config::OutputConfig& out) {
    std::string dir = out.dir;
    if (dir.empty()) {
        if (const char* env = std::getenv("RLMIX_OUT_DIR")) dir = env;
    }
    if (dir.empty()) dir = ".";
    fs::create_directories(dir);
    return dir;
}

dynamics::AmplitudeState initial_state(const config::ExperimentConfig& cfg,
                                       const lattice::LatticeSpec& spec,
                                       std::vector<std::string>* warnings) {
    const auto& st = cfg.initial_state;
    const int sources =
        (st.node ? 1 : 0) + (st.middle ? 1 : 0) + (st.recipe_file ? 1 : 0) + (st.dark ? 1 : 0);
    if (sources != 1) {
        throw ConfigError("initial_state: exactly one of node|middle|recipe_file|dark is required");
    }
    if (st.node) {
        if (warnings != nullptr && lattice::is_lossy_node(*st.node - 1)) {
            warnings->push_back("initial_state.node " + std::to_string(*st.node) +
                                " is a lossy node");
        }
        return initstate::basis_excitation(spec, *st.node);
    }
    if (st.middle) {
        return initstate::basis_excitation(spec, initstate::middle_lossless_node(spec));
    }
    if (st.dark) {
        return initstate::dark_state(spec);
    }
    const auto entries = csv::read_recipe(*st.recipe_file);
    CVector psi(spec.dim(), Complex(0.0, 0.0));
    for (const auto& [node, amp] : entries) {
        if (node > spec.dim()) {
            throw ConfigError("recipe node " + std::to_string(node) + " out of range for dim " +
                              std::to_string(spec.dim()));
        }
        psi[node - 1] = amp;
    }
    const double norm = std::sqrt(kernels::sum_abs2(psi.size(), psi.data()));
    if (!(norm > 0.0)) throw ConfigError("recipe state has zero norm");
    for (Complex& z : psi) z /= norm;
    return dynamics::AmplitudeState{0.0, std::move(psi)};
}

CommandResult cmd_spectrum(const config::ExperimentConfig& cfg) {
    if (!cfg.sweep || cfg.sweep->parameter != "v_over_gamma") {
        throw ConfigError("spectrum needs a sweep block with parameter \"v_over_gamma\"");
    }
    const lattice::LatticeSpec family = cfg.spec();
    const RVector grid =
        linspace(cfg.sweep->from, cfg.sweep->to, std::max<std::size_t>(cfg.sweep->steps, 3));
    if (!(grid.front() > 0.0)) throw ConfigError("spectrum: v_over_gamma must stay positive");

    CommandResult result;
    const std::string dir = resolve_out_dir(cfg.output);

    const std::string spath = join_path(dir, cfg.output.prefix + "_spectrum.csv");
    write_text(spath, spectrum_csv(family, grid, cfg.parallelism));
    result.files.push_back(spath);

    const spectral::EpScan scan = spectral::ep_scan(family, grid);
    const std::string epath = join_path(dir, cfg.output.prefix + "_eps.csv");
    write_text(epath, ep_csv(scan));
    result.files.push_back(epath);

    if (cfg.output.plot) {
        const std::string ppath = join_path(dir, cfg.output.prefix + "_spectrum.svg");
        plot_branches(ppath, scan);
        result.files.push_back(ppath);
    }

    if (scan.lrep) {
        result.notes.push_back("lrep v/gamma = " + csv::format_double(*scan.lrep));
    }
    result.notes.push_back("detected " + std::to_string(scan.coalescences.size()) +
                           " coalescence(s)");
    result.warnings = scan.warnings;
    return result;
}

CommandResult cmd_ep_scan(const config::ExperimentConfig& cfg) {
    if (!cfg.sweep || cfg.sweep->parameter != "v_over_gamma") {
        throw ConfigError("ep-scan needs a sweep block with parameter \"v_over_gamma\"");
    }
    const lattice::LatticeSpec family = cfg.spec();
    const RVector grid =
        linspace(cfg.sweep->from, cfg.sweep->to, std::max<std::size_t>(cfg.sweep->steps, 3));
    if (!(grid.front() > 0.0)) throw ConfigError("ep-scan: v_over_gamma must stay positive");

    CommandResult result;
    const std::string dir = resolve_out_dir(cfg.output);
    const spectral::EpScan scan = spectral::ep_scan(family, grid);

    const std::string epath = join_path(dir, cfg.output.prefix + "_eps.csv");
    write_text(epath, ep_csv(scan));
    result.files.push_back(epath);

    Table branches({"v_over_gamma", "branch", "im_lambda"});
    for (std::size_t i = 0; i < scan.grid.size(); ++i) {
        for (std::size_t k = 0; k < scan.im_branches[i].size(); ++k) {
            branches.row(
                {Table::cell(scan.grid[i]), Table::cell(k), Table::cell(scan.im_branches[i][k])});
        }
    }
    const std::string bpath = join_path(dir, cfg.output.prefix + "_imbranches.csv");
    branches.write(bpath);
    result.files.push_back(bpath);

    if (cfg.output.plot) {
        const std::string ppath = join_path(dir, cfg.output.prefix + "_imbranches.svg");
        plot_branches(ppath, scan);
        result.files.push_back(ppath);
    }

    if (scan.lrep) {
        result.notes.push_back("lrep v/gamma = " + csv::format_double(*scan.lrep));
    }
    result.notes.push_back("detected " + std::to_string(scan.coalescences.size()) +
                           " coalescence(s)");
    result.warnings = scan.warnings;
    return result;
}

CommandResult cmd_mix(const config::ExperimentConfig& cfg) {
    const lattice::LatticeSpec spec = cfg.spec();
    CommandResult result;
    const dynamics::AmplitudeState state0 = initial_state(cfg, spec, &result.warnings);

    const mixing::MixReport rep =
        mixing::mixing_report(spec, state0, cfg.run.epsilon, run_options(cfg));

    const std::string dir = resolve_out_dir(cfg.output);
    const std::string rpath = join_path(dir, cfg.output.prefix + "_mixreport.csv");
    write_text(rpath, mixreport_csv(rep, spec.dim()));
    result.files.push_back(rpath);

    const double gamma = spec.params.gamma;
    Table dist({"t", "distance"});
    for (std::size_t i = 0; i < rep.distance_series.size(); ++i) {
        dist.row({Table::cell(rep.distance_times[i] * gamma), Table::cell(rep.distance_series[i])});
    }
    const std::string dpath = join_path(dir, cfg.output.prefix + "_distance.csv");
    dist.write(dpath);
    result.files.push_back(dpath);

    // Full trajectory at the horizon the report settled on.
    const double dt = cfg.run.dt > 0.0 ? cfg.run.dt : 0.01 / gamma;
    const double t_end = rep.distance_times.empty()
                             ? (cfg.run.t_max > 0.0 ? cfg.run.t_max
                                                    : dynamics::default_t_max(spec.dim(), gamma))
                             : rep.distance_times.back();
    const lattice::Hamiltonian h = lattice::build(spec);
    const spectral::SpectralData sd = spectral::eigensolve(h);
    const RVector times = dynamics::uniform_times(state0.t, state0.t + t_end, dt);
    dynamics::EvolveOptions evopt;
    evopt.store_states = cfg.output.raw_amplitudes;
    const dynamics::Trajectory traj = dynamics::evolve_auto(state0, h, sd, times, evopt);

    const std::string tpath = join_path(dir, cfg.output.prefix + "_trajectory.csv");
    write_text(tpath, trajectory_csv(traj));
    result.files.push_back(tpath);

    if (cfg.output.raw_amplitudes) {
        const std::string apath = join_path(dir, cfg.output.prefix + "_amplitudes.csv");
        write_text(apath, amplitudes_csv(traj));
        result.files.push_back(apath);
    }
    if (cfg.output.plot && !rep.distance_series.empty()) {
        csv::Series s{"distance", rep.distance_times, rep.distance_series};
        const std::string ppath = join_path(dir, cfg.output.prefix + "_distance.svg");
        csv::write_line_chart(ppath, "distance to the stationary distribution", "t*gamma",
                              "L1 distance", {s});
        result.files.push_back(ppath);
    }

    result.notes.push_back(std::string("class = ") + mixing::mix_class_name(rep.cls));
    if (rep.t_mix) {
        result.notes.push_back("t_mix = " + csv::format_double(*rep.t_mix * gamma) +
                               " (units 1/gamma)");
    } else {
        result.notes.push_back("t_mix absent");
    }
    if (rep.ambiguous_dark_overlap) {
        result.warnings.push_back("dark overlap in the ambiguous band [1e-10, 1e-6]; "
                                  "classification is flagged, not asserted");
    }
    return result;
}

CommandResult cmd_scaling(const config::ExperimentConfig& cfg) {
    if (!cfg.sweep || cfg.sweep->parameter != "n_lossy") {
        throw ConfigError("scaling needs a sweep block with parameter \"n_lossy\"");
    }
    const lattice::LatticeSpec family = cfg.spec();
    if (family.topology == lattice::Topology::dbs) {
        throw ConfigError("scaling needs a linear or ring lattice");
    }
    const std::vector<std::size_t> sizes =
        integer_range(cfg.sweep->from, cfg.sweep->to, cfg.sweep->steps);

    mixing::StateRule rule;
    const auto& st = cfg.initial_state;
    if (st.middle) {
        rule = mixing::middle_node_rule();
    } else if (st.node) {
        const std::size_t node = *st.node;
        rule = [node](const lattice::LatticeSpec& s) {
            return initstate::basis_excitation(s, node);
        };
    } else {
        throw ConfigError("scaling needs initial_state.node or initial_state.middle");
    }

    const mixing::ScalingStudy study = mixing::scaling_study(
        family, sizes, rule, cfg.run.epsilon, run_options(cfg), cfg.parallelism);

    CommandResult result;
    const std::string dir = resolve_out_dir(cfg.output);
    const double gamma = family.params.gamma;
    const std::string spath = join_path(dir, cfg.output.prefix + "_scaling.csv");
    write_text(spath, scaling_csv(study, gamma));
    result.files.push_back(spath);

    if (cfg.output.plot) {
        csv::Series s{"t_mix", {}, {}};
        for (const mixing::ScalingPoint& p : study.points) {
            s.x.push_back(static_cast<double>(p.n_lossy));
            s.y.push_back(p.t_mix * gamma);
        }
        const std::string ppath = join_path(dir, cfg.output.prefix + "_scaling.svg");
        csv::write_line_chart(ppath, "mixing time vs lattice size", "n_lossy", "t_mix*gamma", {s});
        result.files.push_back(ppath);
    }

    if (study.post_fit.available) {
        result.notes.push_back("post-lrep log-log exponent = " +
                               csv::format_double(study.post_fit.slope));
    } else {
        result.notes.push_back("post-lrep fit unavailable (fewer than 3 points)");
    }
    if (study.pre_fit.available) {
        result.notes.push_back("pre-lrep log slope = " + csv::format_double(study.pre_fit.slope));
    } else {
        result.notes.push_back("pre-lrep fit unavailable (fewer than 3 points)");
    }
    return result;
}

CommandResult cmd_recipe(const config::ExperimentConfig& cfg) {
    const lattice::LatticeSpec spec = cfg.spec();
    const spectral::SpectralData sd = spectral::eigensolve(lattice::build(spec));

    std::vector<std::size_t> kills = cfg.recipe.kill_modes;
    if (kills.empty()) {
        if (cfg.recipe.kill_slowest == 0) {
            throw ConfigError("recipe needs recipe.kill_modes or recipe.kill_slowest");
        }
        kills = initstate::slowest_modes(sd, cfg.recipe.kill_slowest);
    }
    std::vector<std::size_t> support = cfg.recipe.support;
    if (support.empty()) {
        support = initstate::centered_lossless_support(spec, kills.size() + 1);
    }

    const initstate::StateRecipe recipe = initstate::orthogonal_recipe(spec, sd, support, kills);

    CommandResult result;
    const std::string dir = resolve_out_dir(cfg.output);
    Table table({"node_index", "re_amp", "im_amp"});
    for (std::size_t i = 0; i < recipe.support.size(); ++i) {
        table.row({Table::cell(recipe.support[i]), Table::cell(recipe.amplitudes[i].real()),
                   Table::cell(recipe.amplitudes[i].imag())});
    }
    const std::string rpath = join_path(dir, cfg.output.prefix + "_recipe.csv");
    table.write(rpath);
    result.files.push_back(rpath);

    std::ostringstream note;
    note << "recipe on " << recipe.support.size() << " node(s) killing " << kills.size()
         << " mode(s)";
    result.notes.push_back(note.str());
    if (recipe.dark_orthogonal) {
        result.warnings.push_back("recipe state is orthogonal to the dark state");
    }
    return result;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const InfeasibilityError*>(&e) != nullptr) return 4;
    if (dynamic_cast<const ParameterError*>(&e) != nullptr) return 2;
    if (dynamic_cast<const NumericalError*>(&e) != nullptr) return 3;
    return 3;
}

const char* error_category(const std::exception& e) {
    if (dynamic_cast<const HorizonTooShortError*>(&e) != nullptr) return "horizon";
    if (dynamic_cast<const InfeasibilityError*>(&e) != nullptr) return "infeasible";
    if (dynamic_cast<const ConfigError*>(&e) != nullptr) return "config";
    if (dynamic_cast<const ParameterError*>(&e) != nullptr) return "parameter";
    if (dynamic_cast<const NumericalError*>(&e) != nullptr) return "numerical";
    return "internal";
}

} // namespace rlmix::commands
