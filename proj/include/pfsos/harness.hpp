#pragma once

#include "pfsos/multistate.hpp"
#include "pfsos/testing.hpp"
#include "pfsos/trial_data.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pfsos {

/// One fully specified replication distribution.
struct Scenario {
    std::string id;
    CohortModel model;
    /// Planned total cohort size (both arms), also the 1/sqrt(n) scaling.
    std::size_t n = 1600;
    /// Explicit event targets; otherwise ceil(r * n).
    std::optional<CutoffTargets> targets;
    double r_pfs = 25.0 / 64.0;
    double r_os = 38.0 / 64.0;

    CutoffTargets cutoff_targets() const;
    void validate() const;
};

/// -log(0.9) / 12: ten percent lost to follow-up within 12 time units.
double default_dropout_rate();

/// Illness-death parameters of the four baseline models (1-based).
TransitionIntensities table1_control(int model);
TransitionIntensities table1_power(int model);
CutoffTargets table1_targets(int model);
/// Reduced OS targets reported for the exhausting design.
std::size_t planned_os_target(int model);
const std::vector<double>& default_w_grid();
const std::vector<std::size_t>& default_n_grid();

/// Alternative of the power runs: 25 patients per arm and time unit, at most
/// 800 per arm, experimental intensities moved towards the power target by w.
/// The arm following the control intensities gets treatment indicator 1.
Scenario power_scenario(int model, double w = 1.0);
/// Null scenario of the error-rate runs: both arms on the control intensities,
/// n patients recruited over 32 time units, cutoffs from the event rates.
Scenario null_scenario(int model, std::size_t n, bool frailty);

enum class FailureKind { InsufficientEvents, CutoffOrder, DegenerateVariance, NoSolution, Other };

const char* to_string(FailureKind k);

struct ReplicationResult {
    std::uint64_t replication = 0;
    std::optional<FailureKind> failure;  ///< data-level failure, no outcomes
    std::string message;
    AnalysisStats stats;
    /// One per design; empty optional when that procedure failed.
    std::vector<std::optional<TrialOutcome>> outcomes;
    std::vector<std::optional<FailureKind>> procedure_failures;

    bool ok() const { return !failure.has_value(); }
};

/// Default worker count: PFSOS_WORKERS if set, else the hardware concurrency.
unsigned default_workers();

/// Simulates one replication and runs every design on the shared data.
ReplicationResult replicate(const Scenario& scenario, const std::vector<DesignSpec>& designs,
                            std::uint64_t seed, std::uint64_t replication);

/// Runs replications 0..n_reps-1 on `workers` threads and returns them in
/// replication order. The result does not depend on the worker count.
std::vector<ReplicationResult> simulate_replications(const Scenario& scenario,
                                                     const std::vector<DesignSpec>& designs,
                                                     std::size_t n_reps, std::uint64_t seed,
                                                     unsigned workers);

struct MetricsRow {
    std::string scenario;
    std::string procedure;
    std::size_t n_reps = 0;  ///< valid replications
    std::size_t count_pfs = 0;
    std::size_t count_os = 0;
    std::size_t count_disj = 0;
    std::size_t count_conj = 0;
    std::size_t count_early = 0;
    std::size_t failures = 0;
    std::size_t insufficient_events = 0;
    std::size_t cutoff_order = 0;
    std::size_t other_failures = 0;

    double rej_pfs() const;
    double rej_os() const;
    double disjunctive() const;
    double conjunctive() const;
    double early_stop() const;
    static double se(double p, std::size_t n);
};

/// Design specs of the given procedures for a scenario (default split).
std::vector<DesignSpec> designs_for(const Scenario& scenario, const std::vector<Procedure>& procedures,
                                    double alpha = 0.025, double rho_pfs = 0.2);

std::vector<MetricsRow> aggregate(const std::string& scenario_id, const std::vector<DesignSpec>& designs,
                                  const std::vector<ReplicationResult>& reps);

std::vector<MetricsRow> run_experiment(const Scenario& scenario, const std::vector<DesignSpec>& designs,
                                       std::size_t n_reps, std::uint64_t seed, unsigned workers);

/// Null scenarios over the n grid, each with frailty off and on on the same seed.
std::vector<MetricsRow> fwer_sweep(int model, const std::vector<std::size_t>& n_grid,
                                   const std::vector<Procedure>& procedures, std::size_t n_reps,
                                   std::uint64_t seed, unsigned workers);

std::vector<MetricsRow> power_sweep(int model, const std::vector<double>& w_grid,
                                    const std::vector<Procedure>& procedures, std::size_t n_reps,
                                    std::uint64_t seed, unsigned workers);

/// Relative differences to BON within each scenario of `rows`.
struct RelativeRow {
    std::string scenario;
    std::string procedure;
    double rel_rej_os = 0.0;
    double rel_disjunctive = 0.0;
};

std::vector<RelativeRow> relative_to_bon(const std::vector<MetricsRow>& rows);

struct PlanStep {
    std::size_t d = 0;
    double power = 0.0;
    double se = 0.0;
};

struct PlanResult {
    std::size_t d = 0;
    double power = 0.0;
    double se = 0.0;
    std::vector<PlanStep> trace;
};

struct PlanOptions {
    std::size_t lo = 500;
    std::size_t hi = 800;
    std::size_t scan = 3;
};

/// Smallest event target of `endpoint` whose simulated rejection rate of that
/// endpoint reaches `target_power`. Bisection over integers with common
/// random numbers, then a local scan. Throws NoSolution when the top of the
/// bracket falls short.
PlanResult plan_events(const Scenario& scenario, Procedure procedure, double target_power,
                       Endpoint endpoint, std::size_t n_reps, std::uint64_t seed, unsigned workers,
                       const PlanOptions& options = {});

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);
void write_relative_csv(std::ostream& out, const std::vector<RelativeRow>& rows);

}  // namespace pfsos
