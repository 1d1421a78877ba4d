#pragma once

#include <Eigen/Core>

#include <vector>

namespace pfsos {

/// P[X > h, Y > k] for a standard bivariate normal with correlation r.
double bvn_upper(double h, double k, double r);

/// Symmetric, unit diagonal, and PSD to 1e-8; otherwise eigenvalues are
/// floored at 1e-10 and the diagonal renormalised. Throws InvalidCorrelation
/// when the matrix is malformed or too far from PSD to repair.
Eigen::MatrixXd repair_correlation(const Eigen::MatrixXd& corr, bool* repaired = nullptr);

inline constexpr double kRepairLimit = 1e-2;

struct OrthantQuery {
    std::vector<double> lower_z;
    Eigen::MatrixXd corr;
};

/// P[Z_k > lower_z[k] for all k], Z standard normal with the given
/// correlation. Dimension at most 4. A threshold of -inf drops the component.
double mvn_upper_orthant(const OrthantQuery& query);
double mvn_upper_orthant(const std::vector<double>& lower_z, const Eigen::MatrixXd& corr);

/// Find xi >= 1 with
///   1 - P[Z_k > q(xi * base_levels[k]) for all k, Z_j > fixed_thresholds[j]] = target.
/// corr is indexed over the inflated tests first, then the fixed ones.
struct InflationProblem {
    std::vector<double> base_levels;
    std::vector<double> fixed_thresholds;
    Eigen::MatrixXd corr;
    double target = 0.0;
};

inline constexpr double kInflationTolerance = 1e-6;

/// Rejection probability of the problem at a given xi.
double inflation_rejection(const InflationProblem& problem, double xi);

/// Bisection on [1, 0.499 / max base level]. Returns 1 when nothing is left to
/// exhaust; throws NoSolution when the target is out of reach.
double solve_inflation(const InflationProblem& problem);

}  // namespace pfsos
