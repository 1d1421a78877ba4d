#include "pfsos/error.hpp"
#include "pfsos/mvn.hpp"
#include "pfsos/normal.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

using namespace pfsos;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double upper(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

// P[X > h, Y > k] = int_h^inf phi(x) P[Y > k | x] dx by composite Simpson.
double bvn_simpson(double h, double k, double r) {
    const double lo = std::max(h, -12.0), hi = 12.0;
    const int m = 20000;
    const double step = (hi - lo) / m;
    const double s = std::sqrt(1.0 - r * r);
    double sum = 0.0;
    for (int i = 0; i <= m; ++i) {
        const double x = lo + i * step;
        const double f = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi) * upper((k - r * x) / s);
        sum += f * (i == 0 || i == m ? 1.0 : (i % 2 ? 4.0 : 2.0));
    }
    return sum * step / 3.0;
}

Eigen::MatrixXd equicorrelated(int d, double r) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Constant(d, d, r);
    c.diagonal().setOnes();
    return c;
}

}  // namespace

TEST_CASE("one dimension is the normal tail") {
    Eigen::MatrixXd one = Eigen::MatrixXd::Identity(1, 1);
    CHECK(mvn_upper_orthant({0.0}, one) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(mvn_upper_orthant({1.3}, one) == doctest::Approx(upper(1.3)).epsilon(1e-12));
}

TEST_CASE("bivariate normal matches numerical integration") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> thr(-3.0, 3.0), cor(-0.99, 0.99);
    for (int k = 0; k < 60; ++k) {
        const double h = thr(gen), kk = thr(gen), r = cor(gen);
        CHECK(std::fabs(bvn_upper(h, kk, r) - bvn_simpson(h, kk, r)) < 1e-9);
    }
    CHECK(bvn_upper(0.0, 0.0, 0.0) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(bvn_upper(0.0, 0.0, 0.5) == doctest::Approx(0.25 + std::asin(0.5) / (2 * std::numbers::pi)).epsilon(1e-14));
}

TEST_CASE("independent components multiply") {
    for (int d = 2; d <= 4; ++d) {
        std::vector<double> z = {-1.0, 0.3, 1.7, -2.2};
        z.resize(static_cast<std::size_t>(d));
        double want = 1.0;
        for (double v : z) want *= upper(v);
        CHECK(mvn_upper_orthant(z, Eigen::MatrixXd::Identity(d, d)) == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("orthant probabilities with closed forms") {
    CHECK(mvn_upper_orthant({0.0, 0.0, 0.0}, equicorrelated(3, 0.5)) == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(mvn_upper_orthant({0.0, 0.0, 0.0, 0.0}, equicorrelated(4, 0.5)) == doctest::Approx(0.2).epsilon(1e-9));
    Eigen::MatrixXd c(3, 3);
    c << 1.0, 0.3, -0.4, 0.3, 1.0, 0.6, -0.4, 0.6, 1.0;
    const double want = 0.125 + (std::asin(0.3) + std::asin(-0.4) + std::asin(0.6)) / (4 * std::numbers::pi);
    CHECK(mvn_upper_orthant({0.0, 0.0, 0.0}, c) == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("trivariate with one independent component factorises") {
    Eigen::MatrixXd c = Eigen::MatrixXd::Identity(3, 3);
    c(0, 1) = c(1, 0) = 0.7;
    const double want = bvn_simpson(-0.5, 1.0, 0.7) * upper(0.2);
    CHECK(mvn_upper_orthant({-0.5, 1.0, 0.2}, c) == doctest::Approx(want).epsilon(1e-8));
}

TEST_CASE("orthant probability decreases in each threshold and is permutation invariant") {
    Eigen::MatrixXd c(4, 4);
    c << 1.0, 0.6, 0.8, 0.5, 0.6, 1.0, 0.5, 0.75, 0.8, 0.5, 1.0, 0.6, 0.5, 0.75, 0.6, 1.0;
    const std::vector<double> z = {-1.0, 0.5, -0.2, 1.1};
    const double base = mvn_upper_orthant(z, c);
    for (std::size_t k = 0; k < 4; ++k) {
        auto up = z;
        up[k] += 0.3;
        CHECK(mvn_upper_orthant(up, c) < base);
    }
    const int perm[4] = {2, 0, 3, 1};
    Eigen::MatrixXd pc(4, 4);
    std::vector<double> pz(4);
    for (int i = 0; i < 4; ++i) {
        pz[static_cast<std::size_t>(i)] = z[static_cast<std::size_t>(perm[i])];
        for (int j = 0; j < 4; ++j) pc(i, j) = c(perm[i], perm[j]);
    }
    CHECK(mvn_upper_orthant(pz, pc) == doctest::Approx(base).epsilon(1e-8));
}

TEST_CASE("infinite thresholds") {
    Eigen::MatrixXd c = equicorrelated(3, 0.4);
    CHECK(mvn_upper_orthant({-kInf, 0.3, -0.1}, c) == doctest::Approx(bvn_upper(0.3, -0.1, 0.4)).epsilon(1e-10));
    CHECK(mvn_upper_orthant({kInf, 0.3, -0.1}, c) == 0.0);
    CHECK(mvn_upper_orthant({-kInf, -kInf, -kInf}, c) == doctest::Approx(1.0));
}

TEST_CASE("perfectly correlated components are merged") {
    Eigen::MatrixXd same = equicorrelated(2, 1.0);
    CHECK(mvn_upper_orthant({0.4, 1.2}, same) == doctest::Approx(upper(1.2)).epsilon(1e-12));
    Eigen::MatrixXd opposite = equicorrelated(2, -1.0);
    // X > -1 and -X > -1 means |X| < 1.
    CHECK(mvn_upper_orthant({-1.0, -1.0}, opposite) == doctest::Approx(1.0 - 2.0 * upper(1.0)).epsilon(1e-12));
    CHECK(mvn_upper_orthant({1.0, 1.0}, opposite) == 0.0);
    Eigen::MatrixXd three = Eigen::MatrixXd::Identity(3, 3);
    three(0, 1) = three(1, 0) = 1.0;
    CHECK(mvn_upper_orthant({0.2, -0.3, 0.5}, three) == doctest::Approx(upper(0.2) * upper(0.5)).epsilon(1e-10));
}

TEST_CASE("correlation repair") {
    bool repaired = true;
    Eigen::MatrixXd ok = equicorrelated(3, 0.3);
    CHECK(repair_correlation(ok, &repaired).isApprox(ok));
    CHECK_FALSE(repaired);

    Eigen::MatrixXd bad(3, 3);
    bad << 1.0, 0.95, -0.95, 0.95, 1.0, 0.95, -0.95, 0.95, 1.0;
    CHECK_THROWS_AS(repair_correlation(bad), InvalidCorrelation);

    Eigen::MatrixXd slight(3, 3);
    // Singular at (1, 2) = 0; a small positive entry makes it slightly indefinite.
    slight << 1.0, 0.6, -0.8, 0.6, 1.0, 0.003, -0.8, 0.003, 1.0;
    const Eigen::MatrixXd fixed = repair_correlation(slight, &repaired);
    CHECK(repaired);
    CHECK(fixed.diagonal().isOnes(1e-14));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fixed);
    CHECK(es.eigenvalues().minCoeff() > 0.0);

    Eigen::MatrixXd asym = equicorrelated(2, 0.2);
    asym(0, 1) = 0.3;
    CHECK_THROWS_AS(repair_correlation(asym), InvalidCorrelation);
    Eigen::MatrixXd diag = equicorrelated(2, 0.2);
    diag(1, 1) = 1.1;
    CHECK_THROWS_AS(repair_correlation(diag), InvalidCorrelation);
}

TEST_CASE("inflation of a single test is linear") {
    InflationProblem p;
    p.base_levels = {0.0125};
    p.corr = Eigen::MatrixXd::Identity(1, 1);
    p.target = 0.025;
    CHECK(solve_inflation(p) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("inflation of two equal independent tests") {
    InflationProblem p;
    p.base_levels = {0.0125, 0.0125};
    p.corr = Eigen::MatrixXd::Identity(2, 2);
    p.target = 0.025;
    // (1 - 0.0125 xi)^2 = 0.975
    const double want = (1.0 - std::sqrt(0.975)) / 0.0125;
    CHECK(want == doctest::Approx(1.00633).epsilon(1e-5));
    CHECK(std::fabs(solve_inflation(p) - want) < 2e-6);
}

TEST_CASE("inflation of two independent tests solves a quadratic") {
    InflationProblem p;
    p.base_levels = {0.005, 0.02};
    p.corr = Eigen::MatrixXd::Identity(2, 2);
    p.target = 0.025;
    // 1 - (1 - 0.005 xi)(1 - 0.02 xi) = 0.025
    const double a = 0.005 * 0.02, b = -0.025, c = 0.025;
    const double want = (-b - std::sqrt(b * b - 4 * a * c)) / (2 * a);
    CHECK(std::fabs(solve_inflation(p) - want) < 2e-6);
}

TEST_CASE("inflation against an independent fixed test") {
    InflationProblem p;
    p.base_levels = {0.02};
    p.fixed_thresholds = {norm_quantile(0.005)};
    p.corr = Eigen::MatrixXd::Identity(2, 2);
    p.target = 0.025;
    // 1 - (1 - 0.02 xi)(1 - 0.005) = 0.025
    const double want = (1.0 - 0.975 / 0.995) / 0.02;
    CHECK(std::fabs(solve_inflation(p) - want) < 2e-6);
}

TEST_CASE("inflation round trip and edge cases") {
    InflationProblem p;
    p.base_levels = {0.005, 0.02};
    p.corr = equicorrelated(2, 0.6);
    p.target = 0.025;
    const double xi = solve_inflation(p);
    CHECK(xi > 1.0);
    CHECK(std::fabs(inflation_rejection(p, xi) - p.target) < 1e-6);

    InflationProblem done = p;
    done.target = 0.01;
    CHECK(solve_inflation(done) == 1.0);

    InflationProblem unreachable = p;
    unreachable.base_levels = {0.2};
    unreachable.corr = Eigen::MatrixXd::Identity(1, 1);
    unreachable.fixed_thresholds = {};
    unreachable.target = 0.9;
    CHECK_THROWS_AS(solve_inflation(unreachable), NoSolution);
}

TEST_CASE("inflation grows with the correlation") {
    double prev = 0.0;
    for (double r = -0.5; r <= 0.95; r += 0.15) {
        InflationProblem p;
        p.base_levels = {0.005, 0.02};
        p.corr = equicorrelated(2, r);
        p.target = 0.025;
        const double xi = solve_inflation(p);
        CHECK(xi >= prev - 1e-6);
        prev = xi;
    }
}
