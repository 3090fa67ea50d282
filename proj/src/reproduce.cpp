#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <optional>
#include <sstream>

#include "commands_detail.hpp"
#include "rlmix/commands.hpp"
#include "rlmix/csv.hpp"
#include "rlmix/errors.hpp"
#include "rlmix/initstate.hpp"
#include "rlmix/mixing.hpp"
#include "rlmix/parallel.hpp"
#include "rlmix/spectral.hpp"

// Preset study bundles. Each job emits the CSV series needed to replot
// one panel set at desk scale; gamma = 1 throughout so times are in
// 1/gamma and couplings are v/gamma.

namespace rlmix::commands {

namespace {

using namespace detail;
using csv::Table;
constexpr double kPi = std::numbers::pi;

lattice::CouplingParams params_at(double v, double phi) {
    return lattice::CouplingParams::make(v, phi, 1.0);
}

dynamics::AmplitudeState equal_pair_state() {
    const double a = 1.0 / std::sqrt(2.0);
    return dynamics::AmplitudeState{0.0, {Complex(a, 0.0), Complex(0.0, 0.0), Complex(a, 0.0)}};
}

struct MixTask {
    lattice::LatticeSpec spec;
    dynamics::AmplitudeState state;
};

RVector tmix_batch(const std::vector<MixTask>& tasks, double epsilon, std::size_t parallelism) {
    RVector out(tasks.size(), 0.0);
    parallel_for(tasks.size(), parallelism, [&](std::size_t i) {
        const mixing::MixReport rep = mixing::mixing_report(tasks[i].spec, tasks[i].state, epsilon);
        if (!rep.t_mix) {
            throw HorizonTooShortError("reproduce: no mixing time for task " + std::to_string(i));
        }
        out[i] = *rep.t_mix;
    });
    return out;
}

struct Job {
    std::string dir;
    CommandResult result;
    std::size_t parallelism;

    void emit(const std::string& name, const std::string& text) {
        const std::string path = join_path(dir, name);
        write_text(path, text);
        result.files.push_back(path);
    }
};

config::ExperimentConfig sub_config(const config::ExperimentConfig& base, const std::string& dir,
                                    const std::string& prefix) {
    config::ExperimentConfig cfg = base;
    cfg.output.dir = dir;
    cfg.output.prefix = prefix;
    return cfg;
}

void merge(CommandResult& into, const CommandResult& from) {
    into.files.insert(into.files.end(), from.files.begin(), from.files.end());
    into.notes.insert(into.notes.end(), from.notes.begin(), from.notes.end());
    into.warnings.insert(into.warnings.end(), from.warnings.begin(), from.warnings.end());
}

// fig1b: conventional mixing of the symmetric three-node splitter at
// v/gamma = 0.4, first node excited.
void job_fig1b(Job& job, const config::ExperimentConfig& base) {
    config::ExperimentConfig cfg = sub_config(base, job.dir, "fig1b");
    cfg.topology = "dbs";
    cfg.v = 0.4;
    cfg.phi = kPi / 4.0;
    cfg.gamma = 1.0;
    cfg.initial_state = {};
    cfg.initial_state.node = 1;
    cfg.run.epsilon = 1e-3;
    merge(job.result, cmd_mix(cfg));
}

// fig1c: equal two-node excitation; unconventional at v/gamma = 0.4 and
// non-mixing at 0.6.
void job_fig1c(Job& job, const config::ExperimentConfig& base) {
    Table recipe({"node_index", "re_amp", "im_amp"});
    const double a = 1.0 / std::sqrt(2.0);
    recipe.row({"1", Table::cell(a), "0"});
    recipe.row({"3", Table::cell(a), "0"});
    const std::string rpath = join_path(job.dir, "fig1c_state.csv");
    write_text(rpath, recipe.str());
    job.result.files.push_back(rpath);

    for (const double v : {0.4, 0.6}) {
        std::ostringstream prefix;
        prefix << "fig1c_v0" << static_cast<int>(v * 10);
        config::ExperimentConfig cfg = sub_config(base, job.dir, prefix.str());
        cfg.topology = "dbs";
        cfg.v = v;
        cfg.phi = kPi / 4.0;
        cfg.gamma = 1.0;
        cfg.initial_state = {};
        cfg.initial_state.recipe_file = rpath;
        cfg.run.epsilon = 1e-3;
        cfg.run.t_max = 60.0;
        merge(job.result, cmd_mix(cfg));
    }
}

// fig1mix: mixing time of the symmetric splitter versus v/gamma with the
// decay-rate branches as an inset.
void job_fig1mix(Job& job, const config::ExperimentConfig&) {
    const RVector ratios = linspace(0.1, 1.0, 46);
    std::vector<MixTask> tasks;
    for (double r : ratios) {
        tasks.push_back({lattice::LatticeSpec::dbs(params_at(r, kPi / 4.0)),
                         dynamics::AmplitudeState{0.0, {1.0, 0.0, 0.0}}});
    }
    const RVector tmix = tmix_batch(tasks, 1e-3, job.parallelism);
    Table table({"v_over_gamma", "t_mix"});
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        table.row({Table::cell(ratios[i]), Table::cell(tmix[i])});
    }
    job.emit("fig1mix_tmix.csv", table.str());
    job.emit("fig1mix_spectrum.csv",
             spectrum_csv(lattice::LatticeSpec::dbs(params_at(1.0, kPi / 4.0)), ratios,
                          job.parallelism));
}

// fig2b: dark-state occupation profiles of the 9-lossy-node chain for
// three asymmetry angles.
void job_fig2b(Job& job, const config::ExperimentConfig&) {
    Table table({"phi", "node", "p_st"});
    for (const double phi : {0.25 * kPi, 0.21 * kPi, 0.1 * kPi}) {
        const auto spec = lattice::LatticeSpec::linear(params_at(1.0, phi), 9);
        const dynamics::AmplitudeState dark = initstate::dark_state(spec);
        for (std::size_t j = 0; j < dark.psi.size(); ++j) {
            table.row({Table::cell(phi), Table::cell(j + 1), Table::cell(std::norm(dark.psi[j]))});
        }
    }
    job.emit("fig2b_darkstate.csv", table.str());
}

// fig2c: chain mixing time versus v/gamma for several asymmetry angles
// and initial nodes, plus the symmetric/asymmetric spectra.
void job_fig2c(Job& job, const config::ExperimentConfig&) {
    const std::size_t n_lossy = 9;
    const RVector ratios = linspace(0.5, 3.2, 24);
    struct Curve {
        double phi;
        std::size_t node;
    };
    const std::vector<Curve> curves = {{0.25 * kPi, 1}, {0.21 * kPi, 1}, {0.1 * kPi, 1},
                                       {0.1 * kPi, 2 * n_lossy + 1}};
    std::vector<MixTask> tasks;
    for (const Curve& c : curves) {
        for (double r : ratios) {
            const auto spec = lattice::LatticeSpec::linear(params_at(r, c.phi), n_lossy);
            tasks.push_back({spec, initstate::basis_excitation(spec, c.node)});
        }
    }
    const RVector tmix = tmix_batch(tasks, 1e-3, job.parallelism);
    Table table({"phi", "excited_node", "v_over_gamma", "t_mix"});
    std::size_t idx = 0;
    for (const Curve& c : curves) {
        for (double r : ratios) {
            table.row({Table::cell(c.phi), Table::cell(c.node), Table::cell(r),
                       Table::cell(tmix[idx++])});
        }
    }
    job.emit("fig2c_tmix.csv", table.str());

    const RVector grid = linspace(0.3, 3.2, 40);
    job.emit("fig2c_spectrum_sym.csv",
             spectrum_csv(lattice::LatticeSpec::linear(params_at(1.0, 0.25 * kPi), n_lossy), grid,
                          job.parallelism));
    job.emit("fig2c_spectrum_asym.csv",
             spectrum_csv(lattice::LatticeSpec::linear(params_at(1.0, 0.1 * kPi), n_lossy), grid,
                          job.parallelism));
}

// fig3: chain mixing time versus size for v/gamma = 3, 5, 7; quadratic
// growth past the LREP crossing.
void job_fig3(Job& job, const config::ExperimentConfig&) {
    std::vector<std::size_t> sizes;
    for (std::size_t n = 2; n <= 30; ++n) sizes.push_back(n);
    for (const double v : {3.0, 5.0, 7.0}) {
        const auto family = lattice::LatticeSpec::linear(params_at(v, 0.25 * kPi), 2);
        const mixing::ScalingStudy study = mixing::scaling_study(
            family, sizes, mixing::first_node_rule(), 1e-3, {}, job.parallelism);
        std::ostringstream name;
        name << "fig3_v" << static_cast<int>(v) << ".csv";
        job.emit(name.str(), scaling_csv(study, 1.0));
        if (study.post_fit.available) {
            job.result.notes.push_back("fig3 v/gamma=" + std::to_string(static_cast<int>(v)) +
                                       ": post-lrep exponent " +
                                       csv::format_double(study.post_fit.slope));
        }
    }
}

// fig4: first-node versus middle-node excitation on the symmetric chain
// at v/gamma = 3, with the second-slowest eigenvector profiles for odd
// and even sizes.
void job_fig4(Job& job, const config::ExperimentConfig&) {
    std::vector<std::size_t> sizes;
    for (std::size_t n = 2; n <= 24; ++n) sizes.push_back(n);
    const auto family = lattice::LatticeSpec::linear(params_at(3.0, 0.25 * kPi), 2);
    const mixing::ScalingStudy first =
        mixing::scaling_study(family, sizes, mixing::first_node_rule(), 1e-3, {}, job.parallelism);
    const mixing::ScalingStudy middle = mixing::scaling_study(
        family, sizes, mixing::middle_node_rule(), 1e-3, {}, job.parallelism);
    job.emit("fig4_first.csv", scaling_csv(first, 1.0));
    job.emit("fig4_middle.csv", scaling_csv(middle, 1.0));

    for (const std::size_t nl : {std::size_t{19}, std::size_t{20}}) {
        const auto spec = lattice::LatticeSpec::linear(params_at(3.0, 0.25 * kPi), nl);
        const spectral::SpectralData sd = spectral::eigensolve(lattice::build(spec));
        Table table({"node", "abs_element"});
        for (std::size_t j = 0; j < sd.dim; ++j) {
            table.row({Table::cell(j + 1), Table::cell(std::abs(sd.right[1][j]))});
        }
        job.emit("fig4_vec_n" + std::to_string(nl) + ".csv", table.str());
    }
}

// fig6: the three-lossy-node ring, symmetric and phi = 0.15 pi.
void job_fig6(Job& job, const config::ExperimentConfig&) {
    const RVector ratios = linspace(0.2, 1.2, 26);
    std::vector<MixTask> tasks;
    for (const double phi : {0.25 * kPi, 0.15 * kPi}) {
        for (double r : ratios) {
            const auto spec = lattice::LatticeSpec::ring_balanced(params_at(r, phi), 3);
            tasks.push_back({spec, initstate::basis_excitation(spec, 1)});
        }
    }
    const RVector tmix = tmix_batch(tasks, 1e-3, job.parallelism);
    Table table({"phi", "v_over_gamma", "t_mix"});
    std::size_t idx = 0;
    for (const double phi : {0.25 * kPi, 0.15 * kPi}) {
        for (double r : ratios) {
            table.row({Table::cell(phi), Table::cell(r), Table::cell(tmix[idx++])});
        }
    }
    job.emit("fig6_tmix.csv", table.str());

    const RVector grid = linspace(0.1, 1.2, 40);
    job.emit("fig6_spectrum_sym.csv",
             spectrum_csv(lattice::LatticeSpec::ring_balanced(params_at(1.0, 0.25 * kPi), 3), grid,
                          job.parallelism));
    job.emit("fig6_spectrum_asym.csv",
             spectrum_csv(lattice::LatticeSpec::ring_balanced(params_at(1.0, 0.15 * kPi), 3), grid,
                          job.parallelism));
}

// fig7: ring decay-rate branches for three asymmetry angles and the LREP
// versus phi for the chain and the ring.
void job_fig7(Job& job, const config::ExperimentConfig&) {
    const RVector grid = linspace(0.1, 2.5, 50);
    job.emit("fig7a_spectrum_sym.csv",
             spectrum_csv(lattice::LatticeSpec::ring_balanced(params_at(1.0, 0.25 * kPi), 10), grid,
                          job.parallelism));
    job.emit("fig7a_spectrum_phi022.csv",
             spectrum_csv(lattice::LatticeSpec::ring_balanced(params_at(1.0, 0.22 * kPi), 10), grid,
                          job.parallelism));
    job.emit("fig7b_spectrum_phi010.csv",
             spectrum_csv(lattice::LatticeSpec::ring_balanced(params_at(1.0, 0.1 * kPi), 10), grid,
                          job.parallelism));

    const RVector phis = linspace(0.08 * kPi, 0.24 * kPi, 17);
    RVector ring_lrep(phis.size(), std::nan(""));
    parallel_for(phis.size(), job.parallelism, [&](std::size_t i) {
        const auto family = lattice::LatticeSpec::ring_balanced(params_at(1.0, phis[i]), 10);
        const spectral::EpScan scan = spectral::ep_scan(family, linspace(0.05, 5.0, 80));
        if (scan.lrep) ring_lrep[i] = *scan.lrep;
    });
    Table table({"phi", "lrep_linear", "lrep_ring"});
    for (std::size_t i = 0; i < phis.size(); ++i) {
        table.row({Table::cell(phis[i]),
                   Table::cell(spectral::lrep_linear_analytic(params_at(1.0, phis[i]), 9)),
                   std::isnan(ring_lrep[i]) ? "" : Table::cell(ring_lrep[i])});
    }
    job.emit("fig7c_lrep.csv", table.str());
}

// fig8: ring mixing time versus size, symmetric at several couplings and
// slightly asymmetric at v/gamma = 2.
void job_fig8(Job& job, const config::ExperimentConfig&) {
    std::vector<std::size_t> sizes;
    for (std::size_t n = 3; n <= 24; ++n) sizes.push_back(n);
    for (const double v : {1.0, 2.0, 3.0, 4.0}) {
        const auto family = lattice::LatticeSpec::ring_balanced(params_at(v, 0.25 * kPi), 3);
        const mixing::ScalingStudy study = mixing::scaling_study(
            family, sizes, mixing::first_node_rule(), 1e-3, {}, job.parallelism);
        job.emit("fig8_sym_v" + std::to_string(static_cast<int>(v)) + ".csv",
                 scaling_csv(study, 1.0));
    }
    for (const double phi : {0.22 * kPi, 0.2 * kPi}) {
        const auto family = lattice::LatticeSpec::ring_balanced(params_at(2.0, phi), 3);
        const mixing::ScalingStudy study = mixing::scaling_study(
            family, sizes, mixing::first_node_rule(), 1e-3, {}, job.parallelism);
        std::ostringstream name;
        name << "fig8_asym_phi" << std::llround(phi / kPi * 100) << ".csv";
        job.emit(name.str(), scaling_csv(study, 1.0));
    }
}

// fig9a: asymmetric ring mixing time versus size; log-like scaling is
// restored for phi = 0.23-0.24 pi.
void job_fig9a(Job& job, const config::ExperimentConfig&) {
    std::vector<std::size_t> sizes;
    for (std::size_t n = 4; n <= 28; n += 2) sizes.push_back(n);

    const auto nth_rule = [](std::size_t offset_kind) {
        return [offset_kind](const lattice::LatticeSpec& s) {
            // offset_kind 0: the lossless node the dark state piles onto
            // (alpha_NL); 1: the diametrically opposite lossless node.
            const std::size_t m =
                offset_kind == 0 ? s.n_lossy : std::max<std::size_t>(1, s.n_lossy / 2);
            return initstate::basis_excitation(s, 2 * m - 1);
        };
    };

    struct Curve {
        std::string name;
        double phi;
        std::size_t offset_kind;
    };
    const std::vector<Curve> curves = {{"phi025_near", 0.25 * kPi, 0},
                                       {"phi024_near", 0.24 * kPi, 0},
                                       {"phi023_near", 0.23 * kPi, 0},
                                       {"phi023_far", 0.23 * kPi, 1}};
    for (const Curve& c : curves) {
        const auto family = lattice::LatticeSpec::ring_balanced(params_at(2.0, c.phi), 3);
        const mixing::ScalingStudy study =
            mixing::scaling_study(family, sizes, nth_rule(c.offset_kind), 1e-3, {},
                                  job.parallelism);
        Table table({"n_lossy", "t_mix"});
        for (const mixing::ScalingPoint& p : study.points) {
            table.row({Table::cell(p.n_lossy), Table::cell(p.t_mix)});
        }
        job.emit("fig9a_" + c.name + ".csv", table.str());
    }
}

// fig9b: stabilization of the second smallest decay rate for the
// asymmetric balanced ring.
void job_fig9b(Job& job, const config::ExperimentConfig&) {
    std::vector<std::size_t> sizes;
    for (std::size_t n = 4; n <= 40; n += 2) sizes.push_back(n);
    Table table({"phi", "n_lossy", "gap"});
    for (const double phi : {0.25 * kPi, 0.24 * kPi, 0.23 * kPi}) {
        const auto family = lattice::LatticeSpec::ring_balanced(params_at(2.0, phi), 3);
        const auto series = spectral::gap_vs_size(family, sizes);
        for (const auto& [nl, gap] : series) {
            table.row({Table::cell(phi), Table::cell(nl), Table::cell(gap)});
        }
    }
    job.emit("fig9b_gap.csv", table.str());
}

} // namespace

const std::vector<std::string>& reproduce_ids() {
    static const std::vector<std::string> ids = {"fig1b", "fig1c", "fig1mix", "fig2b",
                                                 "fig2c", "fig3",  "fig4",    "fig6",
                                                 "fig7",  "fig8",  "fig9a",   "fig9b"};
    return ids;
}

CommandResult cmd_reproduce(const std::string& figure_id, const config::ExperimentConfig& base) {
    const auto& ids = reproduce_ids();
    if (std::find(ids.begin(), ids.end(), figure_id) == ids.end()) {
        std::ostringstream msg;
        msg << "unknown figure id '" << figure_id << "'; known:";
        for (const auto& id : ids) msg << ' ' << id;
        throw ConfigError(msg.str());
    }

    Job job;
    job.dir = (std::filesystem::path(resolve_out_dir(base.output)) / figure_id).string();
    std::filesystem::create_directories(job.dir);
    job.parallelism = base.parallelism;

    if (figure_id == "fig1b") job_fig1b(job, base);
    if (figure_id == "fig1c") job_fig1c(job, base);
    if (figure_id == "fig1mix") job_fig1mix(job, base);
    if (figure_id == "fig2b") job_fig2b(job, base);
    if (figure_id == "fig2c") job_fig2c(job, base);
    if (figure_id == "fig3") job_fig3(job, base);
    if (figure_id == "fig4") job_fig4(job, base);
    if (figure_id == "fig6") job_fig6(job, base);
    if (figure_id == "fig7") job_fig7(job, base);
    if (figure_id == "fig8") job_fig8(job, base);
    if (figure_id == "fig9a") job_fig9a(job, base);
    if (figure_id == "fig9b") job_fig9b(job, base);

    job.result.notes.push_back("bundle '" + figure_id + "' wrote " +
                               std::to_string(job.result.files.size()) + " file(s) under " +
                               job.dir);
    return job.result;
}

} // namespace rlmix::commands
