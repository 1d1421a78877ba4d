#include "pfsos/harness.hpp"

#include "pfsos/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

namespace pfsos {

namespace {

struct Table1Row {
    TransitionIntensities control;
    TransitionIntensities power;
    std::size_t d_pfs;
    std::size_t d_os;
    std::size_t planned_os;
};

const Table1Row kTable1[4] = {
    {{0.06, 0.30, 0.30}, {0.10, 0.40, 0.30}, 433, 630, 594},
    {{0.30, 0.28, 0.50}, {0.50, 0.30, 0.60}, 452, 747, 718},
    {{0.140, 0.112, 0.250}, {0.180, 0.150, 0.255}, 644, 742, 703},
    {{0.18, 0.06, 0.17}, {0.23, 0.07, 0.19}, 940, 963, 919},
};

const Table1Row& row(int model) {
    if (model < 1 || model > 4) throw InvalidModel("model index must be 1..4");
    return kTable1[model - 1];
}

FailureKind classify(const std::exception& e) {
    if (dynamic_cast<const InsufficientEvents*>(&e)) return FailureKind::InsufficientEvents;
    if (dynamic_cast<const CutoffOrderViolation*>(&e)) return FailureKind::CutoffOrder;
    if (dynamic_cast<const DegenerateVariance*>(&e)) return FailureKind::DegenerateVariance;
    if (dynamic_cast<const NoSolution*>(&e)) return FailureKind::NoSolution;
    return FailureKind::Other;
}

std::string format_w(double w) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", w);
    return buf;
}

}  // namespace

double default_dropout_rate() { return -std::log(0.9) / 12.0; }

CutoffTargets Scenario::cutoff_targets() const {
    return targets ? *targets : targets_from_rates(n, r_pfs, r_os);
}

void Scenario::validate() const {
    model.validate();
    if (n < 2) throw InvalidModel("scenario needs at least two patients");
    const auto t = cutoff_targets();
    if (t.d_pfs < 1 || t.d_os < 1 || t.d_pfs > n || t.d_os > n) {
        throw InvalidModel("event targets must lie in [1, n]");
    }
    if (2 * model.recruitment.max_per_arm < n) {
        throw InvalidModel("recruitment cap is below the planned cohort size");
    }
}

TransitionIntensities table1_control(int model) { return row(model).control; }
TransitionIntensities table1_power(int model) { return row(model).power; }
CutoffTargets table1_targets(int model) { return {row(model).d_pfs, row(model).d_os}; }
std::size_t planned_os_target(int model) { return row(model).planned_os; }

const std::vector<double>& default_w_grid() {
    static const std::vector<double> grid{0.6, 0.7, 0.8, 0.9, 1.0};
    return grid;
}

const std::vector<std::size_t>& default_n_grid() {
    static const std::vector<std::size_t> grid{128, 256, 640, 960, 1600};
    return grid;
}

Scenario power_scenario(int model, double w) {
    Scenario s;
    s.id = "model" + std::to_string(model) + "_w" + format_w(w);
    s.model.arms.control = table1_control(model);
    s.model.arms.experimental_target = table1_power(model);
    s.model.arms.weight = w;
    s.model.experimental_z = 0;
    s.model.recruitment = {25.0, 800};
    s.model.dropout.rate = default_dropout_rate();
    s.n = 1600;
    s.targets = table1_targets(model);
    return s;
}

Scenario null_scenario(int model, std::size_t n, bool frailty) {
    Scenario s;
    s.id = "null" + std::to_string(model) + "_n" + std::to_string(n) + (frailty ? "_frailty" : "");
    s.model.arms.control = table1_control(model);
    s.model.arms.experimental_target = table1_control(model);
    s.model.arms.weight = 1.0;
    s.model.experimental_z = 0;
    s.model.frailty.enabled = frailty;
    s.model.recruitment = {static_cast<double>(n) / 64.0, (n + 1) / 2};
    s.model.dropout.rate = default_dropout_rate();
    s.n = n;
    s.r_pfs = 25.0 / 64.0;
    s.r_os = 38.0 / 64.0;
    return s;
}

const char* to_string(FailureKind k) {
    switch (k) {
        case FailureKind::InsufficientEvents:
            return "insufficient_events";
        case FailureKind::CutoffOrder:
            return "cutoff_order";
        case FailureKind::DegenerateVariance:
            return "degenerate_variance";
        case FailureKind::NoSolution:
            return "no_solution";
        case FailureKind::Other:
            return "other";
    }
    return "other";
}

unsigned default_workers() {
    if (const char* env = std::getenv("PFSOS_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

ReplicationResult replicate(const Scenario& scenario, const std::vector<DesignSpec>& designs,
                            std::uint64_t seed, std::uint64_t replication) {
    ReplicationResult res;
    res.replication = replication;
    res.outcomes.resize(designs.size());
    res.procedure_failures.resize(designs.size());
    try {
        const Cohort cohort = simulate_cohort(scenario.model, scenario.n, seed, replication);
        res.stats = analyze_cohort(cohort, scenario.cutoff_targets(), scenario.n);
    } catch (const Error& e) {
        res.failure = classify(e);
        res.message = e.what();
        return res;
    }
    for (std::size_t k = 0; k < designs.size(); ++k) {
        try {
            res.outcomes[k] = run_procedure(res.stats, designs[k]);
        } catch (const Error& e) {
            res.procedure_failures[k] = classify(e);
            if (res.message.empty()) res.message = e.what();
        }
    }
    return res;
}

namespace {

// Replications first..first+count-1, filled by index so the worker count
// cannot change the result.
std::vector<ReplicationResult> simulate_range(const Scenario& scenario, const std::vector<DesignSpec>& designs,
                                              std::size_t first, std::size_t count, std::uint64_t seed,
                                              unsigned workers) {
    std::vector<ReplicationResult> out(count);
    const unsigned w = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                out[i] = replicate(scenario, designs, seed, first + i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(count);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < w; ++t) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
    return out;
}

}  // namespace

std::vector<ReplicationResult> simulate_replications(const Scenario& scenario,
                                                     const std::vector<DesignSpec>& designs,
                                                     std::size_t n_reps, std::uint64_t seed,
                                                     unsigned workers) {
    scenario.validate();
    return simulate_range(scenario, designs, 0, n_reps, seed, workers);
}

double MetricsRow::rej_pfs() const { return n_reps ? double(count_pfs) / double(n_reps) : 0.0; }
double MetricsRow::rej_os() const { return n_reps ? double(count_os) / double(n_reps) : 0.0; }
double MetricsRow::disjunctive() const { return n_reps ? double(count_disj) / double(n_reps) : 0.0; }
double MetricsRow::conjunctive() const { return n_reps ? double(count_conj) / double(n_reps) : 0.0; }
double MetricsRow::early_stop() const { return n_reps ? double(count_early) / double(n_reps) : 0.0; }
double MetricsRow::se(double p, std::size_t n) {
    return n ? std::sqrt(p * (1.0 - p) / double(n)) : 0.0;
}

std::vector<DesignSpec> designs_for(const Scenario& scenario, const std::vector<Procedure>& procedures,
                                    double alpha, double rho_pfs) {
    std::vector<DesignSpec> out;
    out.reserve(procedures.size());
    for (Procedure p : procedures) {
        DesignSpec d = DesignSpec::make(p, alpha, rho_pfs, scenario.cutoff_targets());
        d.validate();
        out.push_back(d);
    }
    return out;
}

std::vector<MetricsRow> aggregate(const std::string& scenario_id, const std::vector<DesignSpec>& designs,
                                  const std::vector<ReplicationResult>& reps) {
    std::vector<MetricsRow> rows(designs.size());
    for (std::size_t k = 0; k < designs.size(); ++k) {
        rows[k].scenario = scenario_id;
        rows[k].procedure = to_string(designs[k].procedure);
    }
    for (const auto& r : reps) {
        for (std::size_t k = 0; k < designs.size(); ++k) {
            auto& m = rows[k];
            std::optional<FailureKind> fail = r.failure;
            if (!fail && k < r.procedure_failures.size()) fail = r.procedure_failures[k];
            if (fail) {
                ++m.failures;
                if (*fail == FailureKind::InsufficientEvents) {
                    ++m.insufficient_events;
                } else if (*fail == FailureKind::CutoffOrder) {
                    ++m.cutoff_order;
                } else {
                    ++m.other_failures;
                }
                continue;
            }
            const TrialOutcome& o = *r.outcomes[k];
            ++m.n_reps;
            m.count_pfs += o.rejected_pfs;
            m.count_os += o.rejected_os;
            m.count_disj += (o.rejected_pfs || o.rejected_os);
            m.count_conj += (o.rejected_pfs && o.rejected_os);
            m.count_early += o.early_stop;
        }
    }
    return rows;
}

std::vector<MetricsRow> run_experiment(const Scenario& scenario, const std::vector<DesignSpec>& designs,
                                       std::size_t n_reps, std::uint64_t seed, unsigned workers) {
    scenario.validate();
    // Aggregate in blocks so memory stays bounded for large runs.
    constexpr std::size_t kBlock = 20000;
    std::vector<MetricsRow> total;
    for (std::size_t start = 0; start < n_reps || total.empty(); start += kBlock) {
        const std::size_t count = std::min(kBlock, n_reps - std::min(start, n_reps));
        const auto reps = simulate_range(scenario, designs, start, count, seed, workers);
        auto rows = aggregate(scenario.id, designs, reps);
        if (total.empty()) {
            total = std::move(rows);
        } else {
            for (std::size_t k = 0; k < rows.size(); ++k) {
                auto& t = total[k];
                const auto& r = rows[k];
                t.n_reps += r.n_reps;
                t.count_pfs += r.count_pfs;
                t.count_os += r.count_os;
                t.count_disj += r.count_disj;
                t.count_conj += r.count_conj;
                t.count_early += r.count_early;
                t.failures += r.failures;
                t.insufficient_events += r.insufficient_events;
                t.cutoff_order += r.cutoff_order;
                t.other_failures += r.other_failures;
            }
        }
        if (start + kBlock >= n_reps) break;
    }
    return total;
}

std::vector<MetricsRow> fwer_sweep(int model, const std::vector<std::size_t>& n_grid,
                                   const std::vector<Procedure>& procedures, std::size_t n_reps,
                                   std::uint64_t seed, unsigned workers) {
    if (n_grid.empty()) throw InvalidModel("empty sample-size grid");
    std::vector<MetricsRow> out;
    for (std::size_t n : n_grid) {
        for (bool frailty : {false, true}) {
            const Scenario s = null_scenario(model, n, frailty);
            auto rows = run_experiment(s, designs_for(s, procedures), n_reps, seed, workers);
            out.insert(out.end(), rows.begin(), rows.end());
        }
    }
    return out;
}

std::vector<MetricsRow> power_sweep(int model, const std::vector<double>& w_grid,
                                    const std::vector<Procedure>& procedures, std::size_t n_reps,
                                    std::uint64_t seed, unsigned workers) {
    std::vector<MetricsRow> out;
    for (double w : w_grid) {
        if (!(w >= 0.0 && w <= 1.0)) throw InvalidModel("weights must lie in [0, 1]");
        const Scenario s = power_scenario(model, w);
        auto rows = run_experiment(s, designs_for(s, procedures), n_reps, seed, workers);
        out.insert(out.end(), rows.begin(), rows.end());
    }
    return out;
}

std::vector<RelativeRow> relative_to_bon(const std::vector<MetricsRow>& rows) {
    std::map<std::string, const MetricsRow*> bon;
    for (const auto& r : rows) {
        if (r.procedure == "BON") bon[r.scenario] = &r;
    }
    std::vector<RelativeRow> out;
    for (const auto& r : rows) {
        const auto it = bon.find(r.scenario);
        if (it == bon.end() || r.procedure == "BON") continue;
        const MetricsRow& b = *it->second;
        RelativeRow rel;
        rel.scenario = r.scenario;
        rel.procedure = r.procedure;
        rel.rel_rej_os = b.rej_os() > 0 ? (r.rej_os() - b.rej_os()) / b.rej_os() : 0.0;
        rel.rel_disjunctive = b.disjunctive() > 0 ? (r.disjunctive() - b.disjunctive()) / b.disjunctive() : 0.0;
        out.push_back(rel);
    }
    return out;
}

PlanResult plan_events(const Scenario& scenario, Procedure procedure, double target_power,
                       Endpoint endpoint, std::size_t n_reps, std::uint64_t seed, unsigned workers,
                       const PlanOptions& options) {
    if (options.lo < 1 || options.hi <= options.lo) throw NoSolution("invalid planning bracket");
    PlanResult result;
    std::map<std::size_t, PlanStep> cache;
    auto power_at = [&](std::size_t d) -> double {
        if (auto it = cache.find(d); it != cache.end()) return it->second.power;
        Scenario s = scenario;
        CutoffTargets t = s.cutoff_targets();
        (endpoint == Endpoint::Pfs ? t.d_pfs : t.d_os) = d;
        s.targets = t;
        const auto rows = run_experiment(s, designs_for(s, {procedure}), n_reps, seed, workers);
        const MetricsRow& m = rows.front();
        PlanStep step;
        step.d = d;
        // Failed replications count as non-rejections here.
        const std::size_t all = m.n_reps + m.failures;
        const std::size_t hits = endpoint == Endpoint::Pfs ? m.count_pfs : m.count_os;
        step.power = all ? double(hits) / double(all) : 0.0;
        step.se = MetricsRow::se(step.power, all);
        cache[d] = step;
        result.trace.push_back(step);
        return step.power;
    };

    std::size_t lo = options.lo;
    std::size_t hi = options.hi;
    if (target_power <= 0.0) {
        result.d = lo;
    } else if (power_at(hi) < target_power) {
        throw NoSolution("power " + std::to_string(cache[hi].power) + " at the top of the bracket (" +
                         std::to_string(hi) + ") is below the target");
    } else if (power_at(lo) >= target_power) {
        result.d = lo;
    } else {
        while (hi - lo > 1) {
            const std::size_t mid = lo + (hi - lo) / 2;
            if (power_at(mid) >= target_power) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        std::size_t best = hi;
        const std::size_t from = hi > options.lo + options.scan ? hi - options.scan : options.lo;
        const std::size_t to = std::min(hi + options.scan, options.hi);
        for (std::size_t d = from; d <= to; ++d) {
            if (power_at(d) >= target_power) {
                best = d;
                break;
            }
        }
        result.d = best;
    }
    if (cache.count(result.d)) {
        result.power = cache[result.d].power;
        result.se = cache[result.d].se;
    }
    return result;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
    out << "scenario,procedure,n_reps,rej_pfs,rej_os,disjunctive,conjunctive,early_stop,"
           "se_rej_pfs,se_rej_os,se_disj,se_conj,se_early,failures\n";
    char buf[512];
    for (const auto& r : rows) {
        const std::size_t n = r.n_reps;
        std::snprintf(buf, sizeof buf, "%s,%s,%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%zu\n",
                      r.scenario.c_str(), r.procedure.c_str(), n, r.rej_pfs(), r.rej_os(), r.disjunctive(),
                      r.conjunctive(), r.early_stop(), MetricsRow::se(r.rej_pfs(), n),
                      MetricsRow::se(r.rej_os(), n), MetricsRow::se(r.disjunctive(), n),
                      MetricsRow::se(r.conjunctive(), n), MetricsRow::se(r.early_stop(), n), r.failures);
        out << buf;
    }
}

void write_relative_csv(std::ostream& out, const std::vector<RelativeRow>& rows) {
    out << "scenario,procedure,rel_rej_os,rel_disjunctive\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%s,%.6f,%.6f\n", r.scenario.c_str(), r.procedure.c_str(),
                      r.rel_rej_os, r.rel_disjunctive);
        out << buf;
    }
}

}  // namespace pfsos
