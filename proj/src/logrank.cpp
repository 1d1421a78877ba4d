#include "pfsos/logrank.hpp"

#include "pfsos/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pfsos {

double StepFunction::operator()(double s) const {
    const auto it = std::upper_bound(times.begin(), times.end(), s);
    if (it == times.begin()) return 0.0;
    return values[static_cast<std::size_t>(it - times.begin()) - 1];
}

std::ptrdiff_t GroupShare::locate(double s) const {
    return (std::upper_bound(times.begin(), times.end(), s) - times.begin()) - 1;
}

double GroupShare::psi_at(int group, double s) const {
    const auto k = locate(s);
    return k < 0 ? 0.0 : psi[static_cast<std::size_t>(group)][static_cast<std::size_t>(k)];
}

GroupShare group_share(const Snapshot& snap, Endpoint endpoint) {
    struct Obs {
        double x;
        int delta;
        int arm;
    };
    std::vector<Obs> obs;
    obs.reserve(snap.records.size());
    for (const auto& r : snap.records) obs.push_back({r.x(endpoint), r.delta(endpoint), r.arm});
    std::sort(obs.begin(), obs.end(), [](const Obs& a, const Obs& b) { return a.x < b.x; });

    GroupShare g;
    std::size_t remaining = obs.size();
    std::size_t remaining_exp = 0;
    for (const auto& o : obs) remaining_exp += static_cast<std::size_t>(o.arm);

    double cum = 0.0, psi0 = 0.0, psi1 = 0.0;
    for (std::size_t i = 0; i < obs.size();) {
        std::size_t j = i, d = 0, d1 = 0, leaving = 0, leaving_exp = 0;
        for (; j < obs.size() && obs[j].x == obs[i].x; ++j) {
            d += static_cast<std::size_t>(obs[j].delta);
            d1 += static_cast<std::size_t>(obs[j].delta * obs[j].arm);
            ++leaving;
            leaving_exp += static_cast<std::size_t>(obs[j].arm);
        }
        if (d > 0) {
            // Y >= d > 0 here, so the shares are well defined.
            const double y = static_cast<double>(remaining);
            const double y1 = static_cast<double>(remaining_exp);
            const double jump = static_cast<double>(d) / y;
            const double mu1 = 1.0 - y1 / y;
            const double mu0 = 1.0 - (y - y1) / y;
            cum += jump;
            psi0 += mu0 * jump;
            psi1 += mu1 * jump;
            g.times.push_back(obs[i].x);
            g.events.push_back(d);
            g.events_experimental.push_back(d1);
            g.at_risk.push_back(remaining);
            g.at_risk_experimental.push_back(remaining_exp);
            g.cumhaz.push_back(cum);
            g.mu[0].push_back(mu0);
            g.mu[1].push_back(mu1);
            g.psi[0].push_back(psi0);
            g.psi[1].push_back(psi1);
        }
        remaining -= leaving;
        remaining_exp -= leaving_exp;
        i = j;
    }
    return g;
}

StepFunction nelson_aalen(const Snapshot& snap, Endpoint endpoint) {
    GroupShare g = group_share(snap, endpoint);
    return StepFunction{std::move(g.times), std::move(g.cumhaz)};
}

LogrankResult logrank_nothrow(const Snapshot& snap, Endpoint endpoint) {
    const GroupShare g = group_share(snap, endpoint);
    const double n = static_cast<double>(snap.cohort_size);
    LogrankResult res;
    double u = 0.0, v = 0.0;
    for (std::size_t k = 0; k < g.times.size(); ++k) {
        const double d = static_cast<double>(g.events[k]);
        const double y = static_cast<double>(g.at_risk[k]);
        const double y1 = static_cast<double>(g.at_risk_experimental[k]);
        u += static_cast<double>(g.events_experimental[k]) - d * y1 / y;
        v += d * g.mu[0][k] * g.mu[1][k];
        res.n_events += g.events[k];
    }
    res.u = n > 0.0 ? u / std::sqrt(n) : 0.0;
    res.var = n > 0.0 ? v / n : 0.0;
    res.z = res.var > 0.0 ? res.u / std::sqrt(res.var) : std::numeric_limits<double>::quiet_NaN();
    return res;
}

LogrankResult logrank(const Snapshot& snap, Endpoint endpoint) {
    LogrankResult res = logrank_nothrow(snap, endpoint);
    if (res.n_events > 0 && !res.defined()) {
        throw DegenerateVariance(std::string("zero variance for ") + to_string(endpoint) +
                                 " log-rank statistic with events present");
    }
    return res;
}

namespace {

struct Term {
    std::size_t id;
    int arm;
    double entry;
    double value;
};

// Per-patient factor mu^{Z_i}(X_i) * Delta_i - psi^{Z_i}(X_i), sorted by id.
std::vector<Term> patient_terms(const Snapshot& snap, Endpoint endpoint) {
    const GroupShare g = group_share(snap, endpoint);
    std::vector<Term> terms;
    terms.reserve(snap.records.size());
    for (const auto& r : snap.records) {
        const double x = r.x(endpoint);
        const auto k = g.locate(x);
        double value = 0.0;
        if (k >= 0) {
            const auto kk = static_cast<std::size_t>(k);
            const auto z = static_cast<std::size_t>(r.arm);
            value = -g.psi[z][kk];
            if (r.delta(endpoint) == 1) value += g.mu[z][kk];
        }
        terms.push_back({r.id, r.arm, r.entry, value});
    }
    std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < terms.size(); ++i) {
        if (terms[i].id == terms[i - 1].id) throw InconsistentSnapshots("duplicate patient id");
    }
    return terms;
}

}  // namespace

double cross_covariance(const Snapshot& snap_pfs, const Snapshot& snap_os) {
    if (snap_pfs.cohort_size != snap_os.cohort_size) {
        throw InconsistentSnapshots("snapshots disagree on cohort size");
    }
    const auto a = patient_terms(snap_pfs, Endpoint::Pfs);
    const auto b = patient_terms(snap_os, Endpoint::Os);
    // Patients missing from one snapshot were not enrolled yet and contribute
    // a zero factor; they may only be missing from the strictly earlier one.
    const bool a_may_miss = snap_pfs.calendar_time < snap_os.calendar_time;
    const bool b_may_miss = snap_os.calendar_time < snap_pfs.calendar_time;
    double sum = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && a[i].id < b[j].id)) {
            if (!b_may_miss) throw InconsistentSnapshots("patient missing from later snapshot");
            ++i;
        } else if (i == a.size() || b[j].id < a[i].id) {
            if (!a_may_miss) throw InconsistentSnapshots("patient missing from later snapshot");
            ++j;
        } else {
            if (a[i].arm != b[j].arm || a[i].entry != b[j].entry) {
                throw InconsistentSnapshots("patient record differs between snapshots");
            }
            sum += a[i].value * b[j].value;
            ++i;
            ++j;
        }
    }
    return sum / static_cast<double>(snap_pfs.cohort_size);
}

void derive_correlation(CovarianceEstimate& est) {
    est.clamped = false;
    est.corr.setIdentity();
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            if (i == j) continue;
            const double denom = std::sqrt(est.sigma(i, i) * est.sigma(j, j));
            if (!(denom > 0.0)) {
                est.corr(i, j) = 0.0;
                continue;
            }
            double r = est.sigma(i, j) / denom;
            if (r > kCorrelationClamp || r < -kCorrelationClamp) {
                r = std::clamp(r, -kCorrelationClamp, kCorrelationClamp);
                est.clamped = true;
            }
            est.corr(i, j) = r;
        }
    }
}

CovarianceEstimate covariance_matrix(const Snapshot& interim, const Snapshot& final_snap) {
    const double v_p1 = logrank(interim, Endpoint::Pfs).var;
    const double v_o1 = logrank(interim, Endpoint::Os).var;
    const double v_p2 = logrank(final_snap, Endpoint::Pfs).var;
    const double v_o2 = logrank(final_snap, Endpoint::Os).var;

    CovarianceEstimate est;
    auto& s = est.sigma;
    s(PfsInterim, PfsInterim) = v_p1;
    s(OsInterim, OsInterim) = v_o1;
    s(PfsFinal, PfsFinal) = v_p2;
    s(OsFinal, OsFinal) = v_o2;
    // Independent increments: cov(U(A1), U(A2)) = var(U(A1)).
    s(PfsInterim, PfsFinal) = s(PfsFinal, PfsInterim) = v_p1;
    s(OsInterim, OsFinal) = s(OsFinal, OsInterim) = v_o1;
    s(PfsInterim, OsInterim) = s(OsInterim, PfsInterim) = cross_covariance(interim, interim);
    s(PfsInterim, OsFinal) = s(OsFinal, PfsInterim) = cross_covariance(interim, final_snap);
    s(PfsFinal, OsInterim) = s(OsInterim, PfsFinal) = cross_covariance(final_snap, interim);
    s(PfsFinal, OsFinal) = s(OsFinal, PfsFinal) = cross_covariance(final_snap, final_snap);
    derive_correlation(est);
    return est;
}

}  // namespace pfsos
