#include "pfsos/error.hpp"
#include "pfsos/logrank.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace pfsos;

namespace {

Snapshot make(std::initializer_list<ObservedRecord> recs, std::size_t n = 0) {
    Snapshot s;
    s.calendar_time = 10.0;
    s.records = recs;
    for (std::size_t i = 0; i < s.records.size(); ++i) s.records[i].id = i;
    s.cohort_size = n ? n : s.records.size();
    return s;
}

Snapshot swap_arms(Snapshot s) {
    for (auto& r : s.records) r.arm = 1 - r.arm;
    return s;
}

}  // namespace

TEST_CASE("Nelson-Aalen jumps by events over risk set") {
    // x = 1, 2, 2, 3 with events at 1, 2 and 3.
    const Snapshot s = make({{0, 0, 0, 1, 1, 1, 1}, {0, 1, 0, 2, 1, 2, 1}, {0, 0, 0, 2, 0, 2, 0}, {0, 1, 0, 3, 1, 3, 1}});
    const auto na = nelson_aalen(s, Endpoint::Pfs);
    CHECK(na(0.5) == 0.0);
    CHECK(na(1.0) == doctest::Approx(0.25));
    CHECK(na(2.5) == doctest::Approx(0.25 + 1.0 / 3.0));
    CHECK(na(3.0) == doctest::Approx(0.25 + 1.0 / 3.0 + 1.0));
}

TEST_CASE("log-rank by hand") {
    // Events at x = 1 (arm 1, Y = 4, Y1 = 2) and x = 3 (arm 0, Y = 2, Y1 = 1).
    const Snapshot s = make({{0, 1, 0, 1, 1, 1, 1}, {0, 0, 0, 2, 0, 2, 0}, {0, 0, 0, 3, 1, 3, 1}, {0, 1, 0, 4, 0, 4, 0}});
    const auto r = logrank(s, Endpoint::Pfs);
    CHECK(r.u == doctest::Approx((0.5 - 0.5) / 2.0));
    CHECK(r.var == doctest::Approx((0.25 + 0.25) / 4.0));
    CHECK(r.n_events == 2);
}

TEST_CASE("log-rank and cross covariance agree with brute-force oracles on micro datasets") {
    std::mt19937_64 gen(2024);
    int compared = 0;
    for (int k = 0; k < 400; ++k) {
        const Cohort c = oracle::micro_cohort(gen);
        const double t1 = 0.5 * static_cast<double>(1 + gen() % 8);
        const double t2 = t1 + 0.5 * static_cast<double>(gen() % 6);
        Snapshot s1 = snapshot(c, t1);
        Snapshot s2 = snapshot(c, t2);
        s1.cohort_size = s2.cohort_size = c.size();
        for (const Snapshot* s : {&s1, &s2}) {
            for (Endpoint e : {Endpoint::Pfs, Endpoint::Os}) {
                const auto got = logrank_nothrow(*s, e);
                const auto want = oracle::logrank(*s, e);
                CHECK(std::fabs(got.u - want.u) <= 1e-12);
                CHECK(std::fabs(got.var - want.var) <= 1e-12);
            }
        }
        CHECK(std::fabs(cross_covariance(s1, s1) - oracle::cross_covariance(s1, s1)) <= 1e-12);
        CHECK(std::fabs(cross_covariance(s1, s2) - oracle::cross_covariance(s1, s2)) <= 1e-12);
        CHECK(std::fabs(cross_covariance(s2, s1) - oracle::cross_covariance(s2, s1)) <= 1e-12);
        CHECK(std::fabs(cross_covariance(s2, s2) - oracle::cross_covariance(s2, s2)) <= 1e-12);
        ++compared;
    }
    CHECK(compared >= 200);
}

TEST_CASE("statistics do not depend on record order") {
    std::mt19937_64 gen(7);
    for (int k = 0; k < 100; ++k) {
        const Cohort c = oracle::micro_cohort(gen, 20);
        Snapshot s = snapshot(c, 3.0);
        Snapshot shuffled = s;
        std::shuffle(shuffled.records.begin(), shuffled.records.end(), gen);
        for (Endpoint e : {Endpoint::Pfs, Endpoint::Os}) {
            const auto a = logrank_nothrow(s, e), b = logrank_nothrow(shuffled, e);
            CHECK(a.u == doctest::Approx(b.u).epsilon(1e-12));
            CHECK(a.var == doctest::Approx(b.var).epsilon(1e-12));
        }
        CHECK(cross_covariance(s, s) == doctest::Approx(cross_covariance(shuffled, shuffled)).epsilon(1e-12));
    }
}

TEST_CASE("swapping arm labels flips the score and keeps the variance") {
    std::mt19937_64 gen(99);
    for (int k = 0; k < 100; ++k) {
        const Snapshot s = snapshot(oracle::micro_cohort(gen, 20), 4.0);
        const Snapshot t = swap_arms(s);
        for (Endpoint e : {Endpoint::Pfs, Endpoint::Os}) {
            const auto a = logrank_nothrow(s, e), b = logrank_nothrow(t, e);
            CHECK(a.u == doctest::Approx(-b.u).epsilon(1e-12).scale(1.0));
            CHECK(a.var == doctest::Approx(b.var).epsilon(1e-12));
        }
        CHECK(cross_covariance(s, s) == doctest::Approx(cross_covariance(t, t)).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("zero variance with events is degenerate") {
    const Snapshot one_arm = make({{0, 1, 0, 1, 1, 1, 1}, {0, 1, 0, 2, 1, 2, 1}});
    CHECK_THROWS_AS(logrank(one_arm, Endpoint::Pfs), DegenerateVariance);
    const Snapshot no_events = make({{0, 1, 0, 1, 0, 1, 0}, {0, 0, 0, 2, 0, 2, 0}});
    const auto r = logrank(no_events, Endpoint::Os);
    CHECK(r.n_events == 0);
    CHECK(std::isnan(r.z));
}

TEST_CASE("inconsistent snapshots are rejected") {
    std::mt19937_64 gen(5);
    const Cohort c = oracle::micro_cohort(gen, 10);
    Snapshot a = snapshot(c, 2.0), b = snapshot(c, 4.0);
    Snapshot other_n = b;
    other_n.cohort_size += 1;
    CHECK_THROWS_AS(cross_covariance(a, other_n), InconsistentSnapshots);
    Snapshot flipped = b;
    flipped.records[0].arm = 1 - flipped.records[0].arm;
    if (!a.records.empty()) CHECK_THROWS_AS(cross_covariance(a, flipped), InconsistentSnapshots);
    Snapshot dup = a;
    if (!dup.records.empty()) {
        dup.records.push_back(dup.records.front());
        CHECK_THROWS_AS(cross_covariance(dup, b), InconsistentSnapshots);
    }
    // A patient present early but gone later is inconsistent.
    Snapshot shrunk = b;
    Snapshot early = a;
    early.records = b.records;
    shrunk.records.pop_back();
    CHECK_THROWS_AS(cross_covariance(early, shrunk), InconsistentSnapshots);
}

TEST_CASE("covariance matrix layout") {
    CohortModel m;
    m.arms = {{0.06, 0.30, 0.30}, {0.06, 0.30, 0.30}, 1.0};
    m.dropout.rate = 0.0088;
    const Cohort c = simulate_cohort(m, 400, 1, 0);
    Snapshot s1 = snapshot(c, event_cutoff(c, Endpoint::Pfs, 150));
    Snapshot s2 = snapshot(c, event_cutoff(c, Endpoint::Os, 230));
    s1.cohort_size = s2.cohort_size = 400;
    const auto est = covariance_matrix(s1, s2);
    const auto& S = est.sigma;
    CHECK(S.isApprox(S.transpose()));
    CHECK(S(PfsInterim, PfsFinal) == S(PfsInterim, PfsInterim));
    CHECK(S(OsInterim, OsFinal) == S(OsInterim, OsInterim));
    CHECK(S(PfsInterim, OsInterim) == doctest::Approx(cross_covariance(s1, s1)));
    CHECK(S(PfsInterim, OsFinal) == doctest::Approx(cross_covariance(s1, s2)));
    CHECK(S(PfsFinal, OsInterim) == doctest::Approx(cross_covariance(s2, s1)));
    CHECK(S(PfsFinal, OsFinal) == doctest::Approx(cross_covariance(s2, s2)));
    for (int i = 0; i < 4; ++i) {
        CHECK(est.corr(i, i) == 1.0);
        for (int j = 0; j < 4; ++j) CHECK(std::fabs(est.corr(i, j)) <= 1.0);
    }
    // PFS and OS share most events in this model.
    CHECK(est.corr(PfsInterim, OsInterim) > 0.5);
    CHECK_FALSE(est.clamped);
}

TEST_CASE("correlations are clamped with a flag") {
    CovarianceEstimate est;
    est.sigma.setIdentity();
    est.sigma(0, 1) = est.sigma(1, 0) = 1.2;
    derive_correlation(est);
    CHECK(est.clamped);
    CHECK(est.corr(0, 1) == kCorrelationClamp);
}
