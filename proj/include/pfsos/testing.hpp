#pragma once

#include "pfsos/logrank.hpp"
#include "pfsos/spending.hpp"
#include "pfsos/trial_data.hpp"

#include <array>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pfsos {

enum class Procedure { Bon, Rec, ExLast, ExFirst, BonGs, RecGs, ExGsLast, ExGsFirst, OsOnly };

/// Identifiers "BON", "REC", "EX/LAST", "EX/FIRST", "BON/GS", "REC/GS",
/// "EX/GS/LAST", "EX/GS/FIRST", "OS".
const char* to_string(Procedure p);
/// Throws ConfigError on an unknown id.
Procedure parse_procedure(std::string_view id);
const std::vector<Procedure>& all_procedures();
/// Comma separated list of ids.
std::vector<Procedure> parse_procedure_list(std::string_view list);

enum class DesignFamily { WithoutEarlyOs, WithEarlyOs, OsOnly };

DesignFamily family_of(Procedure p);

struct DesignSpec {
    double alpha = 0.025;
    double rho_pfs = 0.2;
    double rho_os = 0.8;
    CutoffTargets targets;
    Procedure procedure = Procedure::ExLast;
    /// g_PFS(., rho_PFS alpha), g_OS(., rho_OS alpha), g_PFS(., alpha), g_OS(., alpha).
    SpendingFunction g_pfs_local;
    SpendingFunction g_os_local;
    SpendingFunction g_pfs_full;
    SpendingFunction g_os_full;
    /// Propagate the level of a rejected hypothesis to the other one.
    bool recycle = true;
    /// Inflate local levels so the intersection test exhausts its level.
    bool exhaust = true;

    /// Spending choices of the given procedure with the default split.
    static DesignSpec make(Procedure p, double alpha = 0.025, double rho_pfs = 0.2,
                           CutoffTargets targets = {});

    DesignFamily family() const { return family_of(procedure); }
    /// Spending function of the elementary OS test, evaluated at the level it
    /// runs at: g_OS(., alpha) with recycling, g_OS(., rho_OS alpha) without.
    double os_elementary(double tau, double interim_tau) const;

    /// Throws ConfigError.
    void validate() const;
};

/// Standardised statistics and their estimated correlation for one trial.
struct AnalysisStats {
    /// Indexed by StatIndex; NaN when a statistic has no events.
    std::array<double, 4> z{};
    std::array<double, 4> u{};
    std::array<double, 4> var{};
    CovarianceEstimate cov;
    /// Observed information fractions (events / target), not clamped.
    double tau_pfs_interim = 1.0;
    double tau_os_interim = 0.0;
    double interim_time = 0.0;
    double final_time = 0.0;
};

AnalysisStats compute_stats(const Snapshot& interim, const Snapshot& final_snap,
                            const CutoffTargets& targets);

/// Cutoffs, snapshots and statistics for a simulated cohort of planned size n.
/// Throws InsufficientEvents or CutoffOrderViolation.
AnalysisStats analyze_cohort(const Cohort& cohort, const CutoffTargets& targets, std::size_t n);

enum class RejectionStage { None, Interim, Final };

const char* to_string(RejectionStage s);

struct TrialOutcome {
    Procedure procedure = Procedure::ExLast;
    bool rejected_global = false;
    bool rejected_pfs = false;
    bool rejected_os = false;
    bool early_stop = false;
    std::string case_label;
    RejectionStage os_stage = RejectionStage::None;
    /// Inflation factors that were needed; NaN otherwise.
    double xi1 = std::numeric_limits<double>::quiet_NaN();
    double xi2 = std::numeric_limits<double>::quiet_NaN();
    double xi3 = std::numeric_limits<double>::quiet_NaN();
    /// xi2 rho_OS alpha <= xi1 (alpha - g_OS(tau, alpha)), when both are known.
    std::optional<bool> condition_ii;

    bool consonant() const { return !rejected_global || rejected_pfs || rejected_os; }
    bool closed() const { return rejected_global || !(rejected_pfs || rejected_os); }
};

/// Design without an interim OS test in the intersection hypothesis.
TrialOutcome run_design_I(const AnalysisStats& stats, const DesignSpec& spec);
/// Design with group-sequential OS testing from the interim analysis on.
TrialOutcome run_design_II(const AnalysisStats& stats, const DesignSpec& spec);
TrialOutcome run_os_only(const AnalysisStats& stats, const DesignSpec& spec);
TrialOutcome run_procedure(const AnalysisStats& stats, const DesignSpec& spec);

struct ConsonanceReport {
    bool pass = true;
    std::vector<std::string> violations;
};

/// Static conditions: rho_PFS alpha <= g_PFS(tau_pfs, alpha) and
/// g_PFS(., alpha) >= g_PFS(., rho_PFS alpha) on a grid.
ConsonanceReport check_consonance(const DesignSpec& spec, double tau_pfs = 1.0);

/// Run-time condition (ii) for the design without early OS testing.
bool consonance_condition_ii(const DesignSpec& spec, double xi1, double xi2, double tau_os_interim);

}  // namespace pfsos
