#include "pfsos/testing.hpp"

#include "pfsos/error.hpp"
#include "pfsos/mvn.hpp"
#include "pfsos/normal.hpp"

#include <cmath>
#include <limits>

namespace pfsos {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct ProcedureName {
    Procedure p;
    const char* id;
};

constexpr ProcedureName kNames[] = {
    {Procedure::Bon, "BON"},          {Procedure::Rec, "REC"},
    {Procedure::ExLast, "EX/LAST"},   {Procedure::ExFirst, "EX/FIRST"},
    {Procedure::BonGs, "BON/GS"},     {Procedure::RecGs, "REC/GS"},
    {Procedure::ExGsLast, "EX/GS/LAST"}, {Procedure::ExGsFirst, "EX/GS/FIRST"},
    {Procedure::OsOnly, "OS"},
};

// Reject when z <= Phi^-1(level); an undefined statistic never rejects.
bool rejects(double z, double level) {
    if (std::isnan(z) || !(level > 0.0)) return false;
    return z <= norm_quantile(level);
}

double need(double z, const char* what) {
    if (std::isnan(z)) throw DegenerateVariance(std::string(what) + " statistic is undefined (no events)");
    return z;
}

Eigen::MatrixXd sub_corr(const CovarianceEstimate& cov, std::initializer_list<int> idx) {
    const auto n = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd c(n, n);
    Eigen::Index i = 0;
    for (int a : idx) {
        Eigen::Index j = 0;
        for (int b : idx) {
            c(i, j) = a == b ? 1.0 : cov.corr(a, b);
            ++j;
        }
        ++i;
    }
    return c;
}

// Inflation of the final OS level in a two-look group-sequential test that
// spent l1 at the interim and may spend `total` overall.
double os_final_inflation(const AnalysisStats& st, double l1, double total) {
    if (total - l1 <= 0.0) return 1.0;
    InflationProblem p;
    p.base_levels = {total - l1};
    p.fixed_thresholds = {l1 > 0.0 ? norm_quantile(l1) : kNegInf};
    if (l1 > 0.0) need(st.z[OsInterim], "interim OS");
    p.corr = sub_corr(st.cov, {OsFinal, OsInterim});
    p.target = total;
    return solve_inflation(p);
}

// Case 1 of both designs: PFS rejected at the interim, OS continues as a
// group-sequential test with the elementary spending function.
void continue_after_pfs(const AnalysisStats& st, const DesignSpec& spec, TrialOutcome& out,
                        double& xi_store) {
    const double to = st.tau_os_interim;
    const double l1 = spec.os_elementary(to, to);
    if (rejects(st.z[OsInterim], l1)) {
        out.rejected_os = true;
        out.early_stop = true;
        out.os_stage = RejectionStage::Interim;
        out.case_label = "1.1";
        return;
    }
    const double total = spec.os_elementary(1.0, to);
    xi_store = os_final_inflation(st, l1, total);
    if (rejects(st.z[OsFinal], xi_store * (total - l1))) {
        out.rejected_os = true;
        out.os_stage = RejectionStage::Final;
        out.case_label = "1.2.1";
    } else {
        out.case_label = "1.2.2";
    }
}

}  // namespace

const char* to_string(Procedure p) {
    for (const auto& n : kNames) {
        if (n.p == p) return n.id;
    }
    return "?";
}

Procedure parse_procedure(std::string_view id) {
    for (const auto& n : kNames) {
        if (id == n.id) return n.p;
    }
    throw ConfigError("unknown procedure id '" + std::string(id) + "'");
}

const std::vector<Procedure>& all_procedures() {
    static const std::vector<Procedure> all = [] {
        std::vector<Procedure> v;
        for (const auto& n : kNames) v.push_back(n.p);
        return v;
    }();
    return all;
}

std::vector<Procedure> parse_procedure_list(std::string_view list) {
    std::vector<Procedure> out;
    std::size_t start = 0;
    while (start <= list.size()) {
        const auto comma = list.find(',', start);
        auto item = list.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
        while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
        if (!item.empty()) out.push_back(parse_procedure(item));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    if (out.empty()) throw ConfigError("empty procedure list");
    return out;
}

DesignFamily family_of(Procedure p) {
    switch (p) {
        case Procedure::Bon:
        case Procedure::Rec:
        case Procedure::ExLast:
        case Procedure::ExFirst:
            return DesignFamily::WithoutEarlyOs;
        case Procedure::BonGs:
        case Procedure::RecGs:
        case Procedure::ExGsLast:
        case Procedure::ExGsFirst:
            return DesignFamily::WithEarlyOs;
        case Procedure::OsOnly:
            return DesignFamily::OsOnly;
    }
    return DesignFamily::OsOnly;
}

const char* to_string(RejectionStage s) {
    switch (s) {
        case RejectionStage::None:
            return "none";
        case RejectionStage::Interim:
            return "interim";
        case RejectionStage::Final:
            return "final";
    }
    return "none";
}

DesignSpec DesignSpec::make(Procedure p, double alpha, double rho_pfs, CutoffTargets targets) {
    DesignSpec s;
    s.alpha = alpha;
    s.rho_pfs = rho_pfs;
    s.rho_os = 1.0 - rho_pfs;
    s.targets = targets;
    s.procedure = p;
    s.g_pfs_local = SpendingFunction::full_at_one();
    s.g_pfs_full = SpendingFunction::full_at_one();
    const bool early = family_of(p) == DesignFamily::WithEarlyOs;
    s.g_os_local = early ? SpendingFunction::obf() : SpendingFunction::full_at_one();
    switch (p) {
        case Procedure::Bon:
        case Procedure::BonGs:
            s.recycle = false;
            s.exhaust = false;
            s.g_os_full = s.g_os_local;
            break;
        case Procedure::Rec:
            s.recycle = true;
            s.exhaust = false;
            s.g_os_full = SpendingFunction::full_at_one();
            break;
        case Procedure::RecGs:
            s.recycle = true;
            s.exhaust = false;
            s.g_os_full = SpendingFunction::obf();
            break;
        case Procedure::ExLast:
            s.g_os_full = SpendingFunction::full_at_one();
            break;
        case Procedure::ExFirst:
            s.g_os_full = SpendingFunction::full_at_one_plus_step(rho_pfs, StepAnchor::Interim);
            break;
        case Procedure::ExGsLast:
            s.g_os_full = SpendingFunction::obf_plus_step(rho_pfs, StepAnchor::Final);
            break;
        case Procedure::ExGsFirst:
            s.g_os_full = SpendingFunction::obf_plus_step(rho_pfs, StepAnchor::Interim);
            break;
        case Procedure::OsOnly:
            s.recycle = false;
            s.exhaust = false;
            s.g_os_full = SpendingFunction::full_at_one();
            break;
    }
    return s;
}

double DesignSpec::os_elementary(double tau, double interim_tau) const {
    return recycle ? g_os_full(tau, alpha, interim_tau) : g_os_local(tau, rho_os * alpha, interim_tau);
}

void DesignSpec::validate() const {
    if (!(alpha > 0.0 && alpha < 0.5)) throw ConfigError("alpha must lie in (0, 0.5)");
    if (!(rho_pfs > 0.0 && rho_pfs < 1.0) || !(rho_os > 0.0 && rho_os < 1.0)) {
        throw ConfigError("rho_pfs and rho_os must lie in (0, 1)");
    }
    if (std::fabs(rho_pfs + rho_os - 1.0) > 1e-12) throw ConfigError("rho_pfs + rho_os must equal 1");
    if (targets.d_pfs < 1 || targets.d_os < 1) throw ConfigError("event targets must be positive");
    if (family() == DesignFamily::WithEarlyOs && g_os_local.kind != SpendingKind::Obf) {
        throw ConfigError("designs with early OS testing need O'Brien-Fleming spending for g_OS(., rho_OS alpha)");
    }
    const auto report = check_consonance(*this);
    if (!report.pass) throw ConfigError("design is not consonant: " + report.violations.front());
}

AnalysisStats compute_stats(const Snapshot& interim, const Snapshot& final_snap,
                            const CutoffTargets& targets) {
    AnalysisStats st;
    const LogrankResult r[4] = {logrank(interim, Endpoint::Pfs), logrank(interim, Endpoint::Os),
                                logrank(final_snap, Endpoint::Pfs), logrank(final_snap, Endpoint::Os)};
    for (int i = 0; i < 4; ++i) {
        st.z[static_cast<std::size_t>(i)] = r[i].z;
        st.u[static_cast<std::size_t>(i)] = r[i].u;
        st.var[static_cast<std::size_t>(i)] = r[i].var;
    }
    st.cov = covariance_matrix(interim, final_snap);
    st.tau_pfs_interim = information_fraction(interim, Endpoint::Pfs, targets.d_pfs);
    st.tau_os_interim = information_fraction(interim, Endpoint::Os, targets.d_os);
    st.interim_time = interim.calendar_time;
    st.final_time = final_snap.calendar_time;
    return st;
}

AnalysisStats analyze_cohort(const Cohort& cohort, const CutoffTargets& targets, std::size_t n) {
    const double a_pfs = event_cutoff(cohort, Endpoint::Pfs, targets.d_pfs);
    const double a_os = event_cutoff(cohort, Endpoint::Os, targets.d_os);
    if (a_pfs > a_os) {
        throw CutoffOrderViolation("interim cutoff " + std::to_string(a_pfs) + " falls after final cutoff " +
                                   std::to_string(a_os));
    }
    Snapshot s1 = snapshot(cohort, a_pfs);
    Snapshot s2 = snapshot(cohort, a_os);
    s1.cohort_size = n;
    s2.cohort_size = n;
    return compute_stats(s1, s2, targets);
}

TrialOutcome run_design_I(const AnalysisStats& st, const DesignSpec& spec) {
    TrialOutcome out;
    out.procedure = spec.procedure;
    const double a = spec.alpha;
    const double pfs_level = spec.g_pfs_local(st.tau_pfs_interim, spec.rho_pfs * a);

    if (rejects(st.z[PfsInterim], pfs_level)) {
        out.rejected_global = true;
        out.rejected_pfs = rejects(st.z[PfsInterim], spec.g_pfs_full(st.tau_pfs_interim, a));
        continue_after_pfs(st, spec, out, out.xi1);
        return out;
    }

    double xi2 = 1.0;
    if (spec.exhaust) {
        InflationProblem p;
        p.base_levels = {spec.rho_os * a};
        p.fixed_thresholds = {norm_quantile(pfs_level)};
        need(st.z[OsFinal], "final OS");
        p.corr = sub_corr(st.cov, {OsFinal, PfsInterim});
        p.target = a;
        xi2 = solve_inflation(p);
    }
    out.xi2 = xi2;
    if (!rejects(st.z[OsFinal], xi2 * spec.rho_os * a)) {
        out.case_label = "2.2";
        return out;
    }
    out.rejected_global = true;

    const double to = st.tau_os_interim;
    const double l1 = spec.os_elementary(to, to);
    const double total = spec.os_elementary(1.0, to);
    out.xi1 = os_final_inflation(st, l1, total);
    if (spec.exhaust) out.condition_ii = consonance_condition_ii(spec, out.xi1, xi2, to);
    if (rejects(st.z[OsInterim], l1) || rejects(st.z[OsFinal], out.xi1 * (total - l1))) {
        out.rejected_os = true;
        out.os_stage = RejectionStage::Final;
        out.case_label = "2.1";
    } else {
        out.case_label = "2.3";
    }
    return out;
}

TrialOutcome run_design_II(const AnalysisStats& st, const DesignSpec& spec) {
    TrialOutcome out;
    out.procedure = spec.procedure;
    const double a = spec.alpha;
    const double to = st.tau_os_interim;
    const double a_p = spec.g_pfs_local(st.tau_pfs_interim, spec.rho_pfs * a);
    const double a_o = spec.g_os_local(to, spec.rho_os * a, to);

    double xi1 = 1.0;
    if (spec.exhaust) {
        InflationProblem p;
        p.base_levels = {a_p, a_o};
        need(st.z[OsInterim], "interim OS");
        p.corr = sub_corr(st.cov, {PfsInterim, OsInterim});
        p.target = a_p + a_o;
        xi1 = solve_inflation(p);
    }
    out.xi1 = xi1;

    if (rejects(st.z[PfsInterim], xi1 * a_p)) {
        out.rejected_global = true;
        out.rejected_pfs = rejects(st.z[PfsInterim], spec.g_pfs_full(st.tau_pfs_interim, a));
        continue_after_pfs(st, spec, out, out.xi3);
        return out;
    }

    const double l1 = spec.os_elementary(to, to);
    const double total = spec.os_elementary(1.0, to);

    if (rejects(st.z[OsInterim], xi1 * a_o)) {
        out.rejected_global = true;
        if (rejects(st.z[OsInterim], l1)) {
            out.rejected_os = true;
            out.early_stop = true;
            out.os_stage = RejectionStage::Interim;
            out.case_label = "3";
            return out;
        }
        out.xi3 = os_final_inflation(st, l1, total);
        if (rejects(st.z[OsFinal], out.xi3 * (total - l1))) {
            out.rejected_os = true;
            out.os_stage = RejectionStage::Final;
            out.case_label = "3.2.1";
        } else {
            out.case_label = "3.2.2";
        }
        return out;
    }

    // Case 2: level left for OS within the intersection hypothesis.
    const double local_total = spec.g_os_local(1.0, spec.rho_os * a, to);
    const double remaining = local_total - a_o;
    double xi2 = 1.0;
    if (remaining > 0.0) {
        need(st.z[OsFinal], "final OS");
        InflationProblem p;
        p.base_levels = {remaining};
        if (spec.exhaust) {
            p.fixed_thresholds = {norm_quantile(xi1 * a_p), norm_quantile(xi1 * a_o)};
            p.corr = sub_corr(st.cov, {OsFinal, PfsInterim, OsInterim});
            p.target = a;
        } else {
            p.fixed_thresholds = {norm_quantile(a_o)};
            p.corr = sub_corr(st.cov, {OsFinal, OsInterim});
            p.target = local_total;
        }
        xi2 = solve_inflation(p);
    }
    out.xi2 = xi2;
    if (!rejects(st.z[OsFinal], xi2 * remaining)) {
        out.case_label = "2.2";
        return out;
    }
    out.rejected_global = true;
    out.xi3 = os_final_inflation(st, l1, total);
    if (rejects(st.z[OsInterim], l1) || rejects(st.z[OsFinal], out.xi3 * (total - l1))) {
        out.rejected_os = true;
        out.os_stage = RejectionStage::Final;
        out.case_label = "2.1";
    } else {
        out.case_label = "2.3";
    }
    return out;
}

TrialOutcome run_os_only(const AnalysisStats& st, const DesignSpec& spec) {
    TrialOutcome out;
    out.procedure = spec.procedure;
    if (rejects(st.z[OsFinal], spec.alpha)) {
        out.rejected_global = true;
        out.rejected_os = true;
        out.os_stage = RejectionStage::Final;
        out.case_label = "OS.1";
    } else {
        out.case_label = "OS.2";
    }
    return out;
}

TrialOutcome run_procedure(const AnalysisStats& stats, const DesignSpec& spec) {
    switch (spec.family()) {
        case DesignFamily::WithoutEarlyOs:
            return run_design_I(stats, spec);
        case DesignFamily::WithEarlyOs:
            return run_design_II(stats, spec);
        case DesignFamily::OsOnly:
            return run_os_only(stats, spec);
    }
    return run_os_only(stats, spec);
}

ConsonanceReport check_consonance(const DesignSpec& spec, double tau_pfs) {
    ConsonanceReport rep;
    if (spec.family() == DesignFamily::OsOnly) return rep;
    const double a = spec.alpha;
    if (spec.rho_pfs * a > spec.g_pfs_full(tau_pfs, a) + 1e-15) {
        rep.pass = false;
        rep.violations.push_back("(i) rho_PFS alpha exceeds g_PFS(tau_PFS(A_PFS), alpha)");
    }
    for (int k = 1; k <= 100; ++k) {
        const double s = k / 100.0;
        if (spec.g_pfs_full(s, a) + 1e-15 < spec.g_pfs_local(s, spec.rho_pfs * a)) {
            rep.pass = false;
            rep.violations.push_back("g_PFS(., alpha) falls below g_PFS(., rho_PFS alpha) at s = " +
                                     std::to_string(s));
            break;
        }
    }
    return rep;
}

bool consonance_condition_ii(const DesignSpec& spec, double xi1, double xi2, double tau_os_interim) {
    const double a = spec.alpha;
    const double g = spec.recycle ? spec.g_os_full(tau_os_interim, a, tau_os_interim)
                                  : spec.g_os_local(tau_os_interim, spec.rho_os * a, tau_os_interim);
    return xi2 * spec.rho_os * a <= xi1 * (a - g) + 1e-15;
}

}  // namespace pfsos
