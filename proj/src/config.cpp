#include "pfsos/config.hpp"

#include "pfsos/error.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace pfsos {

namespace {

using nlohmann::json;

void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!ok.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
}

template <class T>
T get(const json& obj, const char* key, const std::string& where) {
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

template <class T>
void read_opt(const json& obj, const char* key, const std::string& where, T& dst) {
    if (obj.contains(key)) dst = get<T>(obj, key, where);
}

TransitionIntensities read_intensities(const json& obj, const char* key, const std::string& where) {
    const auto v = get<std::vector<double>>(obj, key, where);
    if (v.size() != 3) throw ConfigError(where + "." + key + " needs three rates [l01, l02, l12]");
    return {v[0], v[1], v[2]};
}

Scenario read_scenario(const json& s, std::optional<int>& model_out) {
    const std::string where = "scenario";
    only_keys(s, where,
              {"id", "model", "null", "control", "experimental", "weight", "experimental_z", "frailty",
               "recruitment", "dropout_rate", "n", "d_pfs", "d_os", "r_pfs", "r_os"});
    Scenario sc;
    bool is_null = false;
    read_opt(s, "null", where, is_null);
    if (s.contains("model")) {
        const int m = get<int>(s, "model", where);
        if (m < 1 || m > 4) throw ConfigError("scenario.model must be 1..4");
        model_out = m;
        std::size_t n = 1600;
        read_opt(s, "n", where, n);
        double w = 1.0;
        read_opt(s, "weight", where, w);
        sc = is_null ? null_scenario(m, n, false) : power_scenario(m, w);
    } else {
        if (!s.contains("control")) throw ConfigError("scenario needs either 'model' or 'control'");
        sc.id = "custom";
        sc.model.arms.control = read_intensities(s, "control", where);
        sc.model.arms.experimental_target =
            s.contains("experimental") ? read_intensities(s, "experimental", where) : sc.model.arms.control;
        sc.model.dropout.rate = default_dropout_rate();
    }
    if (s.contains("control") && s.contains("model")) sc.model.arms.control = read_intensities(s, "control", where);
    if (s.contains("experimental") && s.contains("model")) {
        sc.model.arms.experimental_target = read_intensities(s, "experimental", where);
    }
    if (is_null) sc.model.arms.experimental_target = sc.model.arms.control;
    read_opt(s, "id", where, sc.id);
    read_opt(s, "weight", where, sc.model.arms.weight);
    read_opt(s, "experimental_z", where, sc.model.experimental_z);
    read_opt(s, "dropout_rate", where, sc.model.dropout.rate);
    if (s.contains("frailty")) {
        const auto& f = s.at("frailty");
        only_keys(f, "scenario.frailty", {"enabled", "shape", "rate"});
        read_opt(f, "enabled", "scenario.frailty", sc.model.frailty.enabled);
        read_opt(f, "shape", "scenario.frailty", sc.model.frailty.shape);
        read_opt(f, "rate", "scenario.frailty", sc.model.frailty.rate);
    }
    if (s.contains("recruitment")) {
        const auto& r = s.at("recruitment");
        only_keys(r, "scenario.recruitment", {"per_arm_rate", "max_per_arm"});
        read_opt(r, "per_arm_rate", "scenario.recruitment", sc.model.recruitment.per_arm_rate);
        read_opt(r, "max_per_arm", "scenario.recruitment", sc.model.recruitment.max_per_arm);
    }
    read_opt(s, "n", where, sc.n);
    read_opt(s, "r_pfs", where, sc.r_pfs);
    read_opt(s, "r_os", where, sc.r_os);
    const bool has_d = s.contains("d_pfs") || s.contains("d_os");
    const bool has_r = s.contains("r_pfs") || s.contains("r_os");
    if (has_d && has_r) throw ConfigError("scenario takes either event targets or event rates, not both");
    if (has_r) sc.targets.reset();
    if (has_d) {
        CutoffTargets t = sc.cutoff_targets();
        read_opt(s, "d_pfs", where, t.d_pfs);
        read_opt(s, "d_os", where, t.d_os);
        sc.targets = t;
    }
    if (!s.contains("model") && !has_d && !has_r) {
        throw ConfigError("custom scenarios need event targets (d_pfs, d_os) or rates (r_pfs, r_os)");
    }
    return sc;
}

}  // namespace

const char* to_string(RunMode m) {
    switch (m) {
        case RunMode::Experiment:
            return "experiment";
        case RunMode::FwerSweep:
            return "fwer_sweep";
        case RunMode::PowerSweep:
            return "power_sweep";
        case RunMode::Plan:
            return "plan";
    }
    return "experiment";
}

RunConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    only_keys(root, "config", {"mode", "scenario", "design", "plan", "execution", "n_grid", "w_grid"});

    RunConfig cfg;
    const std::string mode = root.contains("mode") ? get<std::string>(root, "mode", "config") : "experiment";
    if (mode == "experiment") {
        cfg.mode = RunMode::Experiment;
    } else if (mode == "fwer_sweep") {
        cfg.mode = RunMode::FwerSweep;
    } else if (mode == "power_sweep") {
        cfg.mode = RunMode::PowerSweep;
    } else if (mode == "plan") {
        cfg.mode = RunMode::Plan;
    } else {
        throw ConfigError("unknown mode '" + mode + "'");
    }

    if (!root.contains("scenario")) throw ConfigError("config needs a 'scenario' block");
    cfg.scenario = read_scenario(root.at("scenario"), cfg.model);

    cfg.n_grid = default_n_grid();
    cfg.w_grid = default_w_grid();
    read_opt(root, "n_grid", "config", cfg.n_grid);
    read_opt(root, "w_grid", "config", cfg.w_grid);

    cfg.procedures = all_procedures();
    if (root.contains("design")) {
        const auto& d = root.at("design");
        only_keys(d, "design", {"alpha", "rho_pfs", "rho_os", "procedures"});
        read_opt(d, "alpha", "design", cfg.alpha);
        read_opt(d, "rho_pfs", "design", cfg.rho_pfs);
        if (d.contains("rho_os")) {
            const double rho_os = get<double>(d, "rho_os", "design");
            if (!d.contains("rho_pfs")) cfg.rho_pfs = 1.0 - rho_os;
            if (std::abs(cfg.rho_pfs + rho_os - 1.0) > 1e-12) throw ConfigError("rho_pfs + rho_os must equal 1");
        }
        if (d.contains("procedures")) {
            cfg.procedures.clear();
            for (const auto& id : get<std::vector<std::string>>(d, "procedures", "design")) {
                cfg.procedures.push_back(parse_procedure(id));
            }
        }
    }
    if (root.contains("plan")) {
        const auto& p = root.at("plan");
        only_keys(p, "plan", {"procedure", "target_power", "endpoint", "lo", "hi", "scan"});
        if (p.contains("procedure")) cfg.plan.procedure = parse_procedure(get<std::string>(p, "procedure", "plan"));
        read_opt(p, "target_power", "plan", cfg.plan.target_power);
        if (p.contains("endpoint")) {
            const auto e = get<std::string>(p, "endpoint", "plan");
            if (e == "os") {
                cfg.plan.endpoint = Endpoint::Os;
            } else if (e == "pfs") {
                cfg.plan.endpoint = Endpoint::Pfs;
            } else {
                throw ConfigError("plan.endpoint must be 'os' or 'pfs'");
            }
        }
        read_opt(p, "lo", "plan", cfg.plan.options.lo);
        read_opt(p, "hi", "plan", cfg.plan.options.hi);
        read_opt(p, "scan", "plan", cfg.plan.options.scan);
    }
    if (root.contains("execution")) {
        const auto& e = root.at("execution");
        only_keys(e, "execution", {"n_reps", "seed", "workers", "out"});
        read_opt(e, "n_reps", "execution", cfg.execution.n_reps);
        read_opt(e, "seed", "execution", cfg.execution.seed);
        read_opt(e, "workers", "execution", cfg.execution.workers);
        read_opt(e, "out", "execution", cfg.execution.out);
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void RunConfig::validate() const {
    if (execution.n_reps < 1) throw ConfigError("execution.n_reps must be at least 1");
    if (procedures.empty()) throw ConfigError("design.procedures is empty");
    if ((mode == RunMode::FwerSweep || mode == RunMode::PowerSweep) && !model) {
        throw ConfigError("sweeps need scenario.model");
    }
    if (mode == RunMode::FwerSweep && n_grid.empty()) throw ConfigError("n_grid is empty");
    if (mode == RunMode::PowerSweep) {
        if (w_grid.empty()) throw ConfigError("w_grid is empty");
        for (double w : w_grid) {
            if (!(w >= 0.0 && w <= 1.0)) throw ConfigError("w_grid values must lie in [0, 1]");
        }
    }
    if (mode == RunMode::Plan) {
        if (!(plan.target_power >= 0.0 && plan.target_power < 1.0)) {
            throw ConfigError("plan.target_power must lie in [0, 1)");
        }
        if (plan.options.lo < 1 || plan.options.hi <= plan.options.lo) {
            throw ConfigError("plan bracket needs 1 <= lo < hi");
        }
    }
    try {
        scenario.validate();
        (void)designs();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

std::vector<DesignSpec> RunConfig::designs() const {
    return designs_for(scenario, procedures, alpha, rho_pfs);
}

}  // namespace pfsos
