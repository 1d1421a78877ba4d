#include "pfsos/mvn.hpp"

#include "pfsos/error.hpp"
#include "pfsos/normal.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace pfsos {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 6.283185307179586;
constexpr double kPerfect = 1.0 - 1e-10;
constexpr double kTail = 9.0;

// Gauss-Legendre half rules with 6, 12 and 20 points.
constexpr double kW[3][10] = {
    {.1713244923791705, .3607615730481384, .4679139345726904},
    {.04717533638651177, .1069393259953183, .1600783285433464, .2031674267230659,
     .2334925365383547, .2491470458134029},
    {.01761400713915212, .04060142980038694, .06267204833410906, .08327674157670475,
     .1019301198172404, .1181945319615184, .1316886384491766, .1420961093183821,
     .1491729864726037, .1527533871307259}};
constexpr double kX[3][10] = {
    {-.9324695142031522, -.6612093864662647, -.238619186083197},
    {-.9815606342467191, -.904117256370475, -.769902674194305, -.5873179542866171,
     -.3678314989981802, -.1252334085114692},
    {-.9931285991850949, -.9639719272779138, -.9122344282513259, -.8391169718222188,
     -.7463319064601508, -.636053680726515, -.5108670019508271, -.3737060887154196,
     -.2277858511416451, -.07652652113349733}};

double genz_bvnu(double sh, double sk, double r) {
    int ng, lg;
    if (std::fabs(r) < 0.3) {
        ng = 0;
        lg = 3;
    } else if (std::fabs(r) < 0.75) {
        ng = 1;
        lg = 6;
    } else {
        ng = 2;
        lg = 10;
    }
    const double h = sh;
    double k = sk;
    double hk = h * k;
    double bvn = 0.0;
    if (std::fabs(r) < 0.925) {
        const double hs = (h * h + k * k) / 2;
        const double asr = std::asin(r);
        for (int i = 0; i < lg; ++i) {
            double sn = std::sin(asr * (kX[ng][i] + 1) / 2);
            bvn += kW[ng][i] * std::exp((sn * hk - hs) / (1 - sn * sn));
            sn = std::sin(asr * (-kX[ng][i] + 1) / 2);
            bvn += kW[ng][i] * std::exp((sn * hk - hs) / (1 - sn * sn));
        }
        return bvn * asr / (2 * kTwoPi) + norm_cdf(-h) * norm_cdf(-k);
    }
    if (r < 0) {
        k = -k;
        hk = -hk;
    }
    if (std::fabs(r) < 1) {
        const double as = (1 - r) * (1 + r);
        double a = std::sqrt(as);
        const double bs = (h - k) * (h - k);
        const double c = (4 - hk) / 8;
        const double d = (12 - hk) / 16;
        bvn = a * std::exp(-(bs / as + hk) / 2) *
              (1 - c * (bs - as) * (1 - d * bs / 5) / 3 + c * d * as * as / 5);
        if (hk > -160) {
            const double b = std::sqrt(bs);
            bvn -= std::exp(-hk / 2) * std::sqrt(kTwoPi) * norm_cdf(-b / a) * b *
                   (1 - c * bs * (1 - d * bs / 5) / 3);
        }
        a /= 2;
        for (int i = 0; i < lg; ++i) {
            double xs = a * (kX[ng][i] + 1);
            xs *= xs;
            double rs = std::sqrt(1 - xs);
            bvn += a * kW[ng][i] *
                   (std::exp(-bs / (xs * 2) - hk / (rs + 1)) / rs -
                    std::exp(-(bs / xs + hk) / 2) * (c * xs * (d * xs + 1) + 1));
            xs = as * (1 - kX[ng][i]) * (1 - kX[ng][i]) / 4;
            rs = std::sqrt(1 - xs);
            bvn += a * kW[ng][i] * std::exp(-(bs / xs + hk) / 2) *
                   (std::exp(-hk * (1 - rs) / ((rs + 1) * 2)) / rs - (c * xs * (d * xs + 1) + 1));
        }
        bvn = -bvn / kTwoPi;
    }
    if (r > 0) bvn += norm_cdf(-std::max(h, k));
    if (r < 0) bvn = -bvn + std::max(0.0, norm_cdf(-h) - norm_cdf(-k));
    return bvn;
}

double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

double orthant(std::vector<double> a, Eigen::MatrixXd c);

// Integrate over the first component and recurse on the conditional law of
// the others, which is again a standardised orthant problem.
double condition_on(std::size_t pivot, const std::vector<double>& a, const Eigen::MatrixXd& c) {
    const std::size_t m = a.size() - 1;
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (i != pivot) rest.push_back(i);
    }
    std::vector<double> r(m), s(m);
    for (std::size_t i = 0; i < m; ++i) {
        r[i] = c(static_cast<Eigen::Index>(pivot), static_cast<Eigen::Index>(rest[i]));
        s[i] = std::sqrt(std::max(1.0 - r[i] * r[i], 0.0));
    }
    Eigen::MatrixXd cc = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m),
                                                   static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            const double num =
                c(static_cast<Eigen::Index>(rest[i]), static_cast<Eigen::Index>(rest[j])) - r[i] * r[j];
            const double v = std::clamp(num / (s[i] * s[j]), -1.0, 1.0);
            cc(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
            cc(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
        }
    }
    const double lo = std::max(a[pivot], -kTail);
    if (lo >= kTail) return 0.0;

    auto integrand = [&](double x) {
        std::vector<double> b(m);
        for (std::size_t i = 0; i < m; ++i) b[i] = (a[rest[i]] - r[i] * x) / s[i];
        double p;
        if (m == 2) {
            p = genz_bvnu(b[0], b[1], cc(0, 1));
        } else {
            p = orthant(b, cc);
        }
        return norm_pdf(x) * p;
    };
    const double tol = m == 2 ? 1e-11 : 1e-9;
    const double val =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, lo, kTail, 12, tol);
    return clamp01(val);
}

double orthant(std::vector<double> a, Eigen::MatrixXd c) {
    for (double v : a) {
        if (v == kInf) return 0.0;
    }
    // Drop components that are always satisfied.
    for (std::size_t i = a.size(); i-- > 0;) {
        if (a[i] == -kInf) {
            std::vector<double> na;
            std::vector<Eigen::Index> keep;
            for (std::size_t j = 0; j < a.size(); ++j) {
                if (j != i) {
                    na.push_back(a[j]);
                    keep.push_back(static_cast<Eigen::Index>(j));
                }
            }
            return orthant(na, c(keep, keep));
        }
    }
    const std::size_t n = a.size();
    if (n == 0) return 1.0;
    if (n == 1) return norm_sf(a[0]);

    // Merge (anti)perfectly correlated pairs.
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double r = c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (std::fabs(r) <= kPerfect) continue;
            std::vector<double> na;
            std::vector<Eigen::Index> keep;
            for (std::size_t k = 0; k < n; ++k) {
                if (k != j) {
                    na.push_back(a[k]);
                    keep.push_back(static_cast<Eigen::Index>(k));
                }
            }
            Eigen::MatrixXd nc = c(keep, keep);
            if (r > 0) {
                na[i] = std::max(a[i], a[j]);
                return orthant(na, nc);
            }
            // Z_j = -Z_i: require a_i < Z_i < -a_j.
            const double upper = -a[j];
            if (upper <= a[i]) return 0.0;
            std::vector<double> nb = na;
            nb[i] = upper;
            return clamp01(orthant(na, nc) - orthant(nb, nc));
        }
    }
    if (n == 2) return clamp01(genz_bvnu(a[0], a[1], c(0, 1)));

    // Condition on the component least correlated with the others.
    std::size_t pivot = 0;
    double best = kInf;
    for (std::size_t i = 0; i < n; ++i) {
        double worst = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                worst = std::max(worst, std::fabs(c(static_cast<Eigen::Index>(i),
                                                    static_cast<Eigen::Index>(j))));
            }
        }
        if (worst < best) {
            best = worst;
            pivot = i;
        }
    }
    return condition_on(pivot, a, c);
}

}  // namespace

double bvn_upper(double h, double k, double r) {
    Eigen::MatrixXd c(2, 2);
    c << 1.0, r, r, 1.0;
    return mvn_upper_orthant({h, k}, c);
}

Eigen::MatrixXd repair_correlation(const Eigen::MatrixXd& corr, bool* repaired) {
    if (repaired) *repaired = false;
    const Eigen::Index n = corr.rows();
    if (corr.cols() != n) throw InvalidCorrelation("correlation matrix is not square");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::isfinite(corr(i, i)) || std::fabs(corr(i, i) - 1.0) > 1e-8) {
            throw InvalidCorrelation("correlation matrix needs a unit diagonal");
        }
        for (Eigen::Index j = 0; j < n; ++j) {
            const double v = corr(i, j);
            if (!std::isfinite(v) || std::fabs(v - corr(j, i)) > 1e-8 || std::fabs(v) > 1.0 + 1e-8) {
                throw InvalidCorrelation("correlation matrix is not a symmetric matrix in [-1, 1]");
            }
        }
    }
    Eigen::MatrixXd c = (corr + corr.transpose()) / 2.0;
    c.diagonal().setOnes();
    c = c.cwiseMax(-1.0).cwiseMin(1.0);
    if (n == 0) return c;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
    const double min_eig = es.eigenvalues().minCoeff();
    if (min_eig >= -1e-8) return c;
    if (min_eig < -kRepairLimit) {
        throw InvalidCorrelation("correlation matrix is not positive semidefinite (min eigenvalue " +
                                 std::to_string(min_eig) + ")");
    }
    const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(1e-10);
    Eigen::MatrixXd fixed = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    const Eigen::VectorXd d = fixed.diagonal().cwiseSqrt().cwiseInverse();
    fixed = d.asDiagonal() * fixed * d.asDiagonal();
    fixed.diagonal().setOnes();
    if (repaired) *repaired = true;
    return fixed;
}

double mvn_upper_orthant(const std::vector<double>& lower_z, const Eigen::MatrixXd& corr) {
    const auto n = static_cast<Eigen::Index>(lower_z.size());
    if (corr.rows() != n || corr.cols() != n) {
        throw InvalidCorrelation("threshold vector and correlation matrix disagree in size");
    }
    if (n > 4) throw InvalidCorrelation("orthant probabilities are limited to dimension 4");
    for (double v : lower_z) {
        if (std::isnan(v)) throw InvalidCorrelation("NaN threshold");
    }
    return orthant(lower_z, repair_correlation(corr));
}

double mvn_upper_orthant(const OrthantQuery& query) {
    return mvn_upper_orthant(query.lower_z, query.corr);
}

double inflation_rejection(const InflationProblem& problem, double xi) {
    std::vector<double> z;
    z.reserve(problem.base_levels.size() + problem.fixed_thresholds.size());
    for (double a : problem.base_levels) z.push_back(norm_quantile(xi * a));
    for (double t : problem.fixed_thresholds) z.push_back(t);
    return 1.0 - mvn_upper_orthant(z, problem.corr);
}

double solve_inflation(const InflationProblem& problem) {
    const auto& levels = problem.base_levels;
    if (levels.empty()) throw NoSolution("inflation problem without inflated tests");
    const auto dim = static_cast<Eigen::Index>(levels.size() + problem.fixed_thresholds.size());
    if (problem.corr.rows() != dim || problem.corr.cols() != dim) {
        throw InvalidCorrelation("inflation problem correlation has the wrong size");
    }
    double max_level = 0.0;
    for (double a : levels) {
        if (!(a > 0.0)) throw NoSolution("inflation base levels must be positive");
        max_level = std::max(max_level, a);
    }
    if (!(problem.target > 0.0) || problem.target >= 1.0) {
        throw NoSolution("inflation target must lie in (0, 1)");
    }
    if (levels.size() == 1 && problem.fixed_thresholds.empty()) {
        const double xi = problem.target / levels[0];
        if (xi <= 1.0) return 1.0;
        if (xi * levels[0] >= 0.5) throw NoSolution("target needs a level of at least 0.5");
        return xi;
    }

    const double f_lo = inflation_rejection(problem, 1.0);
    if (f_lo >= problem.target) return 1.0;
    double lo = 1.0;
    double hi = 0.499 / max_level;
    if (hi <= lo || inflation_rejection(problem, hi) < problem.target) {
        throw NoSolution("inflation target " + std::to_string(problem.target) +
                         " unreachable before the largest level reaches 0.5");
    }
    while (hi - lo > kInflationTolerance) {
        const double mid = 0.5 * (lo + hi);
        if (inflation_rejection(problem, mid) < problem.target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace pfsos
