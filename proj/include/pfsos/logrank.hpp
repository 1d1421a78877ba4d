#pragma once

#include "pfsos/trial_data.hpp"

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <vector>

namespace pfsos {

struct LogrankResult {
    double u = 0.0;    ///< sum over events of (Z - Y1/Y), scaled by 1/sqrt(n)
    double var = 0.0;  ///< sum over events of Y0*Y1/Y^2, scaled by 1/n
    double z = 0.0;    ///< u / sqrt(var); NaN when var == 0
    std::size_t n_events = 0;

    bool defined() const { return var > 0.0; }
};

/// Right-continuous step function, zero before the first jump.
struct StepFunction {
    std::vector<double> times;
    std::vector<double> values;

    double operator()(double s) const;
};

/// Risk-set summaries on the distinct event times of one endpoint of a
/// snapshot, with the group shares mu^g = 1 - Y^g/Y and their integrals
/// psi^g(s) = sum over event times u <= s of mu^g(u) * dLambda(u).
struct GroupShare {
    std::vector<double> times;
    std::vector<std::size_t> events;
    std::vector<std::size_t> events_experimental;
    std::vector<std::size_t> at_risk;
    std::vector<std::size_t> at_risk_experimental;
    std::vector<double> cumhaz;
    std::array<std::vector<double>, 2> mu;
    std::array<std::vector<double>, 2> psi;

    /// Index of the last event time <= s, or -1.
    std::ptrdiff_t locate(double s) const;
    double psi_at(int group, double s) const;
};

GroupShare group_share(const Snapshot& snap, Endpoint endpoint);

/// Pooled Nelson-Aalen estimate; jumps of (events)/(at risk).
StepFunction nelson_aalen(const Snapshot& snap, Endpoint endpoint);

/// Throws DegenerateVariance when events exist but the variance is zero.
LogrankResult logrank(const Snapshot& snap, Endpoint endpoint);
/// As logrank, but reports a zero variance through `z = NaN` instead of throwing.
LogrankResult logrank_nothrow(const Snapshot& snap, Endpoint endpoint);

/// Estimated covariance between U_PFS at snap_pfs's date and U_OS at
/// snap_os's date. Both snapshots must come from the same cohort.
double cross_covariance(const Snapshot& snap_pfs, const Snapshot& snap_os);

/// Index order of the 4-vector of statistics.
enum StatIndex : int { PfsInterim = 0, OsInterim = 1, PfsFinal = 2, OsFinal = 3 };

struct CovarianceEstimate {
    Eigen::Matrix4d sigma = Eigen::Matrix4d::Zero();
    Eigen::Matrix4d corr = Eigen::Matrix4d::Identity();
    bool clamped = false;

    double correlation(int i, int j) const { return corr(i, j); }
};

inline constexpr double kCorrelationClamp = 0.9999;

/// Rebuilds `corr` from `sigma`, clamping to +-kCorrelationClamp.
void derive_correlation(CovarianceEstimate& est);

/// Sigma-hat over (PFS@A1, OS@A1, PFS@A2, OS@A2).
CovarianceEstimate covariance_matrix(const Snapshot& interim, const Snapshot& final_snap);

}  // namespace pfsos
