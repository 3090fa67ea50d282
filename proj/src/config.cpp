#include "rlmix/config.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "rlmix/errors.hpp"

namespace rlmix::config {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ConfigError("config." + where + ": " + what);
}

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (allowed.find(key) == allowed.end()) fail(where, "unknown key '" + key + "'");
    }
}

double get_number(const json& obj, const std::string& where, const std::string& key,
                  double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) fail(where + "." + key, "expected a number");
    return obj[key].get<double>();
}

std::size_t get_count(const json& obj, const std::string& where, const std::string& key,
                      std::size_t fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number_unsigned()) fail(where + "." + key, "expected a non-negative integer");
    return obj[key].get<std::size_t>();
}

ExperimentConfig from_json(const json& root) {
    if (!root.is_object()) throw ConfigError("config: top level must be an object");
    check_keys(root, "(top)",
               {"lattice", "initial_state", "run", "sweep", "recipe", "output", "parallelism"});

    ExperimentConfig cfg;

    if (root.contains("lattice")) {
        const json& lat = root["lattice"];
        if (!lat.is_object()) fail("lattice", "expected an object");
        check_keys(lat, "lattice", {"topology", "n_lossy", "v", "phi", "gamma", "delta"});
        if (lat.contains("topology")) {
            if (!lat["topology"].is_string()) fail("lattice.topology", "expected a string");
            cfg.topology = lat["topology"].get<std::string>();
            if (cfg.topology != "dbs" && cfg.topology != "linear" && cfg.topology != "ring") {
                fail("lattice.topology", "must be one of dbs|linear|ring, got '" + cfg.topology + "'");
            }
        }
        cfg.n_lossy = get_count(lat, "lattice", "n_lossy", cfg.n_lossy);
        cfg.v = get_number(lat, "lattice", "v", cfg.v);
        cfg.phi = get_number(lat, "lattice", "phi", cfg.phi);
        cfg.gamma = get_number(lat, "lattice", "gamma", cfg.gamma);
        if (lat.contains("delta")) {
            if (lat["delta"].is_string()) {
                if (lat["delta"].get<std::string>() != "balanced") {
                    fail("lattice.delta", "must be a number or \"balanced\"");
                }
                cfg.delta = std::nullopt;
            } else if (lat["delta"].is_number()) {
                cfg.delta = lat["delta"].get<double>();
            } else {
                fail("lattice.delta", "must be a number or \"balanced\"");
            }
        }
    }

    if (root.contains("initial_state")) {
        const json& st = root["initial_state"];
        if (!st.is_object()) fail("initial_state", "expected an object");
        check_keys(st, "initial_state", {"node", "middle", "recipe_file", "dark"});
        if (st.contains("node")) {
            if (!st["node"].is_number_unsigned() || st["node"].get<std::size_t>() == 0) {
                fail("initial_state.node", "expected a positive 1-based node index");
            }
            cfg.initial_state.node = st["node"].get<std::size_t>();
        }
        if (st.contains("middle")) {
            if (!st["middle"].is_boolean()) fail("initial_state.middle", "expected a boolean");
            cfg.initial_state.middle = st["middle"].get<bool>();
        }
        if (st.contains("recipe_file")) {
            if (!st["recipe_file"].is_string()) fail("initial_state.recipe_file", "expected a path");
            cfg.initial_state.recipe_file = st["recipe_file"].get<std::string>();
        }
        if (st.contains("dark")) {
            if (!st["dark"].is_boolean()) fail("initial_state.dark", "expected a boolean");
            cfg.initial_state.dark = st["dark"].get<bool>();
        }
        const int sources = (cfg.initial_state.node ? 1 : 0) + (cfg.initial_state.middle ? 1 : 0) +
                            (cfg.initial_state.recipe_file ? 1 : 0) +
                            (cfg.initial_state.dark ? 1 : 0);
        if (sources > 1) fail("initial_state", "exactly one of node|middle|recipe_file|dark");
    }

    if (root.contains("run")) {
        const json& run = root["run"];
        if (!run.is_object()) fail("run", "expected an object");
        check_keys(run, "run", {"epsilon", "t_max", "dt", "max_extensions"});
        cfg.run.epsilon = get_number(run, "run", "epsilon", cfg.run.epsilon);
        cfg.run.t_max = get_number(run, "run", "t_max", cfg.run.t_max);
        cfg.run.dt = get_number(run, "run", "dt", cfg.run.dt);
        cfg.run.max_extensions =
            static_cast<int>(get_count(run, "run", "max_extensions",
                                       static_cast<std::size_t>(cfg.run.max_extensions)));
        if (!(cfg.run.epsilon > 0.0)) fail("run.epsilon", "must be positive");
        if (cfg.run.t_max < 0.0) fail("run.t_max", "must be non-negative");
        if (cfg.run.dt < 0.0) fail("run.dt", "must be non-negative");
    }

    if (root.contains("sweep")) {
        const json& sw = root["sweep"];
        if (!sw.is_object()) fail("sweep", "expected an object");
        check_keys(sw, "sweep", {"parameter", "from", "to", "steps"});
        SweepConfig sweep;
        if (!sw.contains("parameter") || !sw["parameter"].is_string()) {
            fail("sweep.parameter", "required string");
        }
        sweep.parameter = sw["parameter"].get<std::string>();
        if (sweep.parameter != "v_over_gamma" && sweep.parameter != "phi" &&
            sweep.parameter != "n_lossy") {
            fail("sweep.parameter",
                 "must name an existing field: v_over_gamma|phi|n_lossy, got '" + sweep.parameter +
                     "'");
        }
        sweep.from = get_number(sw, "sweep", "from", 0.0);
        sweep.to = get_number(sw, "sweep", "to", 0.0);
        sweep.steps = get_count(sw, "sweep", "steps", 0);
        if (!(sweep.to >= sweep.from)) fail("sweep", "range is empty (to < from)");
        cfg.sweep = sweep;
    }

    if (root.contains("recipe")) {
        const json& rc = root["recipe"];
        if (!rc.is_object()) fail("recipe", "expected an object");
        check_keys(rc, "recipe", {"kill_slowest", "kill_modes", "support"});
        cfg.recipe.kill_slowest = get_count(rc, "recipe", "kill_slowest", 0);
        if (rc.contains("kill_modes")) {
            if (!rc["kill_modes"].is_array()) fail("recipe.kill_modes", "expected an array");
            for (const auto& x : rc["kill_modes"]) {
                if (!x.is_number_unsigned()) fail("recipe.kill_modes", "expected mode indices");
                cfg.recipe.kill_modes.push_back(x.get<std::size_t>());
            }
        }
        if (rc.contains("support")) {
            if (!rc["support"].is_array()) fail("recipe.support", "expected an array");
            for (const auto& x : rc["support"]) {
                if (!x.is_number_unsigned() || x.get<std::size_t>() == 0) {
                    fail("recipe.support", "expected 1-based node indices");
                }
                cfg.recipe.support.push_back(x.get<std::size_t>());
            }
        }
    }

    if (root.contains("output")) {
        const json& out = root["output"];
        if (!out.is_object()) fail("output", "expected an object");
        check_keys(out, "output", {"dir", "prefix", "plot", "raw_amplitudes"});
        if (out.contains("dir")) {
            if (!out["dir"].is_string()) fail("output.dir", "expected a path");
            cfg.output.dir = out["dir"].get<std::string>();
        }
        if (out.contains("prefix")) {
            if (!out["prefix"].is_string()) fail("output.prefix", "expected a string");
            cfg.output.prefix = out["prefix"].get<std::string>();
        }
        if (out.contains("plot")) {
            if (!out["plot"].is_boolean()) fail("output.plot", "expected a boolean");
            cfg.output.plot = out["plot"].get<bool>();
        }
        if (out.contains("raw_amplitudes")) {
            if (!out["raw_amplitudes"].is_boolean()) {
                fail("output.raw_amplitudes", "expected a boolean");
            }
            cfg.output.raw_amplitudes = out["raw_amplitudes"].get<bool>();
        }
    }

    cfg.parallelism = get_count(root, "(top)", "parallelism", 0);
    return cfg;
}

json to_json(const ExperimentConfig& cfg) {
    json root;
    root["lattice"]["topology"] = cfg.topology;
    root["lattice"]["n_lossy"] = cfg.n_lossy;
    root["lattice"]["v"] = cfg.v;
    root["lattice"]["phi"] = cfg.phi;
    root["lattice"]["gamma"] = cfg.gamma;
    if (cfg.delta) {
        root["lattice"]["delta"] = *cfg.delta;
    } else {
        root["lattice"]["delta"] = "balanced";
    }

    json st = json::object();
    if (cfg.initial_state.node) st["node"] = *cfg.initial_state.node;
    if (cfg.initial_state.middle) st["middle"] = true;
    if (cfg.initial_state.recipe_file) st["recipe_file"] = *cfg.initial_state.recipe_file;
    if (cfg.initial_state.dark) st["dark"] = true;
    root["initial_state"] = st;

    root["run"]["epsilon"] = cfg.run.epsilon;
    root["run"]["t_max"] = cfg.run.t_max;
    root["run"]["dt"] = cfg.run.dt;
    root["run"]["max_extensions"] = cfg.run.max_extensions;

    if (cfg.sweep) {
        root["sweep"]["parameter"] = cfg.sweep->parameter;
        root["sweep"]["from"] = cfg.sweep->from;
        root["sweep"]["to"] = cfg.sweep->to;
        root["sweep"]["steps"] = cfg.sweep->steps;
    }

    if (cfg.recipe.kill_slowest > 0 || !cfg.recipe.kill_modes.empty() ||
        !cfg.recipe.support.empty()) {
        root["recipe"]["kill_slowest"] = cfg.recipe.kill_slowest;
        root["recipe"]["kill_modes"] = cfg.recipe.kill_modes;
        root["recipe"]["support"] = cfg.recipe.support;
    }

    root["output"]["dir"] = cfg.output.dir;
    root["output"]["prefix"] = cfg.output.prefix;
    root["output"]["plot"] = cfg.output.plot;
    root["output"]["raw_amplitudes"] = cfg.output.raw_amplitudes;
    root["parallelism"] = cfg.parallelism;
    return root;
}

void apply_one_override(json& root, const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("--set expects key.path=value, got '" + assignment + "'");
    }
    const std::string path = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);

    json value;
    try {
        value = json::parse(raw);
    } catch (const json::parse_error&) {
        value = raw; // treat unparsable values as strings
    }

    json* node = &root;
    std::size_t start = 0;
    for (;;) {
        const std::size_t dot = path.find('.', start);
        const std::string key = path.substr(start, dot - start);
        if (key.empty()) throw ConfigError("--set path has an empty segment: '" + path + "'");
        if (dot == std::string::npos) {
            (*node)[key] = value;
            break;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

} // namespace

lattice::LatticeSpec ExperimentConfig::spec() const {
    const lattice::CouplingParams p = lattice::CouplingParams::make(v, phi, gamma);
    if (topology == "dbs") return lattice::LatticeSpec::dbs(p);
    if (topology == "linear") return lattice::LatticeSpec::linear(p, n_lossy);
    if (topology == "ring") {
        if (delta) return lattice::LatticeSpec::ring(p, n_lossy, *delta);
        return lattice::LatticeSpec::ring_balanced(p, n_lossy);
    }
    throw ConfigError("config.lattice.topology: unknown topology '" + topology + "'");
}

ExperimentConfig parse(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return from_json(root);
}

ExperimentConfig parse_with_overrides(const std::string& json_text,
                                      const std::vector<std::string>& overrides) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    for (const std::string& o : overrides) apply_one_override(root, o);
    return from_json(root);
}

ExperimentConfig load(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_with_overrides(buf.str(), overrides);
}

std::string serialize(const ExperimentConfig& cfg) {
    return to_json(cfg).dump(2) + "\n";
}

} // namespace rlmix::config
