#include "pfsos/error.hpp"
#include "pfsos/multistate.hpp"

#include <doctest.h>

#include <cmath>

using namespace pfsos;

namespace {

ArmModel model1(double w) {
    return {{0.06, 0.30, 0.30}, {0.10, 0.40, 0.30}, w};
}

}  // namespace

TEST_CASE("effective intensities interpolate between control and target") {
    const auto m0 = model1(0.0);
    CHECK(effective_intensities(m0, 1) == m0.control);
    const auto m1 = model1(1.0);
    CHECK(effective_intensities(m1, 1) == m1.experimental_target);
    const auto half = effective_intensities(model1(0.5), 1);
    CHECK(half.lambda01 == doctest::Approx(0.08));
    CHECK(half.lambda02 == doctest::Approx(0.35));
    CHECK(half.lambda12 == doctest::Approx(0.30));
    CHECK(effective_intensities(m1, 0) == m1.control);
}

TEST_CASE("invalid models are rejected") {
    CHECK_THROWS_AS(TransitionIntensities({-0.1, 0.3, 0.3}).validate(), InvalidModel);
    CHECK_THROWS_AS(TransitionIntensities({0.0, 0.0, 0.3}).validate(), InvalidModel);
    ArmModel bad{{0.1, 0.1, 0.1}, {0.5, 0.1, 0.1}, 1.2};
    CHECK_THROWS_AS(bad.validate(), InvalidModel);
    CohortModel m;
    m.arms = model1(1.0);
    m.experimental_z = 2;
    CHECK_THROWS_AS(m.validate(), InvalidModel);
    m.experimental_z = 0;
    CHECK_NOTHROW(m.validate());
}

TEST_CASE("experimental_z selects which indicator follows the target intensities") {
    CohortModel m;
    m.arms = model1(1.0);
    m.experimental_z = 1;
    CHECK(m.intensities_for(1) == m.arms.experimental_target);
    CHECK(m.intensities_for(0) == m.arms.control);
    m.experimental_z = 0;
    CHECK(m.intensities_for(0) == m.arms.experimental_target);
    CHECK(m.intensities_for(1) == m.arms.control);
}

TEST_CASE("sampled paths respect the illness-death structure") {
    const TransitionIntensities r{0.06, 0.30, 0.30};
    FrailtySpec no_frailty;
    DropoutSpec drop{0.01};
    const int n = 100000;
    int progressed = 0;
    double sum_pfs = 0.0;
    for (int i = 0; i < n; ++i) {
        CounterRng rng(5, 0, static_cast<std::uint64_t>(i));
        const auto p = sample_path(r, no_frailty, drop, rng);
        REQUIRE(p.t_pfs <= p.t_os);
        REQUIRE(p.t_pfs > 0.0);
        if (p.t_os > p.t_pfs) ++progressed;
        sum_pfs += p.t_pfs;
    }
    const double share = static_cast<double>(progressed) / n;
    CHECK(share == doctest::Approx(0.06 / 0.36).epsilon(0.03));
    CHECK(sum_pfs / n == doctest::Approx(1.0 / 0.36).epsilon(0.02));
}

TEST_CASE("frailty only rescales the event times of the same path") {
    const TransitionIntensities r{0.18, 0.06, 0.17};
    FrailtySpec off;
    FrailtySpec on{true, 10.0, 10.0};
    DropoutSpec drop{0.0087};
    for (std::uint64_t i = 0; i < 200; ++i) {
        CounterRng a(9, 1, i), b(9, 1, i), c(9, 1, i);
        const auto base = sample_path(r, off, drop, a);
        const auto frail = sample_path(r, on, drop, b);
        CHECK(frail.t_pfs * frail.frailty == doctest::Approx(base.t_pfs).epsilon(1e-12));
        CHECK(frail.t_os * frail.frailty == doctest::Approx(base.t_os).epsilon(1e-12));
        CHECK(frail.dropout == base.dropout);
        const auto unit = sample_path(r, on, drop, c, 1.0);
        CHECK(unit.t_pfs == base.t_pfs);
        CHECK(unit.t_os == base.t_os);
    }
}

TEST_CASE("simulated cohorts follow the recruitment grid") {
    CohortModel m;
    m.arms = model1(1.0);
    m.recruitment = {25.0, 800};
    m.dropout.rate = 0.01;
    const Cohort c = simulate_cohort(m, 101, 3, 7);
    REQUIRE(c.size() == 101);
    CHECK(c[0].arm == 0);
    CHECK(c[1].arm == 1);
    CHECK(c[100].arm == 0);
    CHECK(c[2].entry == doctest::Approx(1.0 / 25.0));
    CHECK(c[3].entry == doctest::Approx(1.0 / 25.0));
    int arm0 = 0;
    for (const auto& p : c) arm0 += p.arm == 0;
    CHECK(arm0 == 51);

    const Cohort again = simulate_cohort(m, 101, 3, 7);
    for (std::size_t i = 0; i < c.size(); ++i) {
        CHECK(c[i].t_pfs == again[i].t_pfs);
        CHECK(c[i].t_os == again[i].t_os);
    }
    const Cohort other = simulate_cohort(m, 101, 3, 8);
    CHECK(other[0].t_pfs != c[0].t_pfs);

    m.recruitment.max_per_arm = 10;
    CHECK(simulate_cohort(m, 101, 3, 7).size() == 20);
}

TEST_CASE("arms with the target intensities have shorter PFS under the table alternative") {
    CohortModel m;
    m.arms = model1(1.0);
    m.experimental_z = 0;
    m.recruitment.max_per_arm = 10000;
    const Cohort c = simulate_cohort(m, 20000, 11, 0);
    double s[2] = {0, 0};
    for (const auto& p : c) s[p.arm] += p.t_pfs;
    // Arm 0 follows the target intensities (total exit rate 0.5 vs 0.36).
    CHECK(s[0] / 10000 == doctest::Approx(2.0).epsilon(0.04));
    CHECK(s[1] / 10000 == doctest::Approx(1.0 / 0.36).epsilon(0.04));
}
