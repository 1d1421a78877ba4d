#include "pfsos/config.hpp"
#include "pfsos/error.hpp"
#include "pfsos/harness.hpp"
#include "pfsos/testing.hpp"
#include "pfsos/trial_data.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

using namespace pfsos;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> n_reps;
    std::optional<unsigned> workers;
    std::optional<std::string> out;
    std::optional<std::string> procedures;
};

const char* error_name(const Error& e) {
    if (dynamic_cast<const InvalidModel*>(&e)) return "InvalidModel";
    if (dynamic_cast<const InsufficientEvents*>(&e)) return "InsufficientEvents";
    if (dynamic_cast<const CutoffOrderViolation*>(&e)) return "CutoffOrderViolation";
    if (dynamic_cast<const DegenerateVariance*>(&e)) return "DegenerateVariance";
    if (dynamic_cast<const InconsistentSnapshots*>(&e)) return "InconsistentSnapshots";
    if (dynamic_cast<const InvalidCorrelation*>(&e)) return "InvalidCorrelation";
    if (dynamic_cast<const NoSolution*>(&e)) return "NoSolution";
    if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
    return "Error";
}

RunConfig load_with_overrides(const std::string& path, const Overrides& o) {
    RunConfig cfg = load_config(path);
    if (o.seed) cfg.execution.seed = *o.seed;
    if (o.n_reps) cfg.execution.n_reps = *o.n_reps;
    if (o.workers) cfg.execution.workers = *o.workers;
    if (o.out) cfg.execution.out = *o.out;
    if (o.procedures) cfg.procedures = parse_procedure_list(*o.procedures);
    cfg.validate();
    return cfg;
}

unsigned workers_of(const RunConfig& cfg) {
    return cfg.execution.workers ? cfg.execution.workers : default_workers();
}

void add_common(CLI::App* cmd, std::string& config, Overrides& o) {
    cmd->add_option("--config", config, "JSON run configuration")->required();
    cmd->add_option("--seed", o.seed, "Base seed of the random streams");
    cmd->add_option("--n-reps", o.n_reps, "Replications per scenario (per evaluation when planning)");
    cmd->add_option("--workers", o.workers, "Worker threads (default: PFSOS_WORKERS or all cores)");
    cmd->add_option("--out", o.out, "Output CSV path (default: standard output)");
}

// Writes to the configured path, or to stdout when it is empty.
template <class Fn>
void with_output(const std::string& path, Fn&& fn) {
    if (path.empty()) {
        fn(std::cout);
        return;
    }
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file '" + path + "'");
    fn(out);
}

int cmd_simulate(const std::string& config, const Overrides& o) {
    const RunConfig cfg = load_with_overrides(config, o);
    const unsigned workers = workers_of(cfg);
    std::vector<MetricsRow> rows;
    switch (cfg.mode) {
        case RunMode::Experiment:
            rows = run_experiment(cfg.scenario, cfg.designs(), cfg.execution.n_reps, cfg.execution.seed, workers);
            break;
        case RunMode::FwerSweep:
            rows = fwer_sweep(*cfg.model, cfg.n_grid, cfg.procedures, cfg.execution.n_reps, cfg.execution.seed,
                              workers);
            break;
        case RunMode::PowerSweep:
            rows = power_sweep(*cfg.model, cfg.w_grid, cfg.procedures, cfg.execution.n_reps, cfg.execution.seed,
                               workers);
            break;
        case RunMode::Plan:
            throw ConfigError("mode 'plan' is run with the plan command");
    }
    with_output(cfg.execution.out, [&](std::ostream& out) { write_metrics_csv(out, rows); });
    if (cfg.mode == RunMode::PowerSweep && !cfg.execution.out.empty()) {
        std::string rel = cfg.execution.out;
        const auto dot = rel.rfind(".csv");
        rel = (dot == std::string::npos ? rel : rel.substr(0, dot)) + "_relative.csv";
        with_output(rel, [&](std::ostream& out) { write_relative_csv(out, relative_to_bon(rows)); });
    }
    return kOk;
}

Snapshot read_snapshot_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read '" + path + "'");
    return read_snapshot(in);
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

int cmd_analyze(const std::string& interim_path, const std::string& final_path, const std::string& cohort_path,
                const std::string& config, const std::optional<std::string>& procedures) {
    std::optional<RunConfig> cfg;
    if (!config.empty()) cfg = load_config(config);
    std::vector<Procedure> procs = cfg ? cfg->procedures : all_procedures();
    if (procedures) procs = parse_procedure_list(*procedures);
    const double alpha = cfg ? cfg->alpha : 0.025;
    const double rho_pfs = cfg ? cfg->rho_pfs : 0.2;

    AnalysisStats stats;
    CutoffTargets targets;
    if (!cohort_path.empty()) {
        if (!cfg) throw ConfigError("analyzing a cohort needs --config with the event targets");
        std::ifstream in(cohort_path);
        if (!in) throw ConfigError("cannot read '" + cohort_path + "'");
        const Cohort cohort = read_cohort(in);
        targets = cfg->scenario.cutoff_targets();
        stats = analyze_cohort(cohort, targets, cohort.size());
    } else {
        if (interim_path.empty() || final_path.empty()) {
            throw ConfigError("analyze needs --interim and --final snapshots, or --cohort");
        }
        const Snapshot s1 = read_snapshot_file(interim_path);
        const Snapshot s2 = read_snapshot_file(final_path);
        targets = cfg ? cfg->scenario.cutoff_targets()
                      : CutoffTargets{std::max<std::size_t>(1, s1.events(Endpoint::Pfs)),
                                      std::max<std::size_t>(1, s2.events(Endpoint::Os))};
        stats = compute_stats(s1, s2, targets);
    }

    std::cout << "interim_time=" << num(stats.interim_time) << "\n";
    std::cout << "final_time=" << num(stats.final_time) << "\n";
    std::cout << "d_pfs=" << targets.d_pfs << "\nd_os=" << targets.d_os << "\n";
    std::cout << "tau_pfs_interim=" << num(stats.tau_pfs_interim) << "\n";
    std::cout << "tau_os_interim=" << num(stats.tau_os_interim) << "\n";
    const char* names[4] = {"pfs_interim", "os_interim", "pfs_final", "os_final"};
    for (int i = 0; i < 4; ++i) {
        std::cout << "z_" << names[i] << "=" << num(stats.z[static_cast<std::size_t>(i)]) << "\n";
    }
    for (int i = 0; i < 4; ++i) {
        for (int j = i + 1; j < 4; ++j) {
            std::cout << "corr_" << names[i] << "__" << names[j] << "=" << num(stats.cov.corr(i, j)) << "\n";
        }
    }
    std::cout << "corr_clamped=" << (stats.cov.clamped ? 1 : 0) << "\n";
    int status = kOk;
    for (Procedure p : procs) {
        const std::string id = to_string(p);
        DesignSpec spec = DesignSpec::make(p, alpha, rho_pfs, targets);
        spec.validate();
        try {
            const TrialOutcome o = run_procedure(stats, spec);
            std::cout << id << ".case=" << o.case_label << "\n"
                      << id << ".reject_global=" << o.rejected_global << "\n"
                      << id << ".reject_pfs=" << o.rejected_pfs << "\n"
                      << id << ".reject_os=" << o.rejected_os << "\n"
                      << id << ".os_stage=" << to_string(o.os_stage) << "\n"
                      << id << ".early_stop=" << o.early_stop << "\n"
                      << id << ".xi1=" << num(o.xi1) << "\n"
                      << id << ".xi2=" << num(o.xi2) << "\n"
                      << id << ".xi3=" << num(o.xi3) << "\n";
        } catch (const Error& e) {
            std::cout << id << ".error=" << error_name(e) << ": " << e.what() << "\n";
            status = kRuntimeError;
        }
    }
    return status;
}

int cmd_plan(const std::string& config, const Overrides& o) {
    const RunConfig cfg = load_with_overrides(config, o);
    const unsigned workers = workers_of(cfg);
    const PlanResult r = plan_events(cfg.scenario, cfg.plan.procedure, cfg.plan.target_power, cfg.plan.endpoint,
                                     cfg.execution.n_reps, cfg.execution.seed, workers, cfg.plan.options);
    std::cout << "procedure=" << to_string(cfg.plan.procedure) << "\n"
              << "endpoint=" << to_string(cfg.plan.endpoint) << "\n"
              << "target_power=" << num(cfg.plan.target_power) << "\n"
              << "d=" << r.d << "\n"
              << "power=" << num(r.power) << "\n"
              << "se=" << num(r.se) << "\n"
              << "evaluations=" << r.trace.size() << "\n";
    if (!cfg.execution.out.empty()) {
        with_output(cfg.execution.out, [&](std::ostream& out) {
            out << "d,power,se\n";
            for (const auto& s : r.trace) out << s.d << "," << num(s.power) << "," << num(s.se) << "\n";
        });
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Group-sequential PFS/OS testing: simulation, analysis and event planning"};
    app.require_subcommand(1);

    std::string sim_config, plan_config, an_config, an_interim, an_final, an_cohort;
    Overrides sim_o, plan_o;
    std::optional<std::string> an_procedures;

    auto* sim = app.add_subcommand("simulate", "Run the experiment or sweep described by a config");
    add_common(sim, sim_config, sim_o);
    sim->add_option("--procedures", sim_o.procedures, "Comma separated procedure ids, e.g. BON,EX/LAST");

    auto* an = app.add_subcommand("analyze", "Apply the procedures to one observed trial");
    an->add_option("--interim", an_interim, "Snapshot table at the interim cutoff");
    an->add_option("--final", an_final, "Snapshot table at the final cutoff");
    an->add_option("--cohort", an_cohort, "Latent cohort table (cutoffs are derived from the config targets)");
    an->add_option("--config", an_config, "JSON config supplying design and event targets");
    an->add_option("--procedures", an_procedures, "Comma separated procedure ids");

    auto* plan = app.add_subcommand("plan", "Calibrate an event target by simulation");
    add_common(plan, plan_config, plan_o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }

    try {
        if (*sim) return cmd_simulate(sim_config, sim_o);
        if (*an) return cmd_analyze(an_interim, an_final, an_cohort, an_config, an_procedures);
        if (*plan) return cmd_plan(plan_config, plan_o);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const Error& e) {
        std::cerr << "error: " << error_name(e) << ": " << e.what() << "\n";
        return kRuntimeError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeError;
    }
    return kOk;
}
