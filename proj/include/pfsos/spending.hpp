#pragma once

#include <string>

namespace pfsos {

enum class SpendingKind { FullAtOne, Obf, FullAtOnePlusStep, ObfPlusStep };

/// Where the step of a *PlusStep function sits: at the interim OS
/// information fraction (known only once the interim cutoff is observed)
/// or at the end of the trial.
enum class StepAnchor { Interim, Final };

/// Cumulative alpha-spending function g(s, l).
///   FullAtOne:          1{s >= 1} l
///   Obf:                2 (1 - Phi(Phi^-1(1 - l/2) / sqrt(s)))
///   FullAtOnePlusStep:  1{s >= s0} share l + 1{s >= 1} (1 - share) l
///   ObfPlusStep:        1{s >= s0} share l + Obf(s, (1 - share) l)
struct SpendingFunction {
    SpendingKind kind = SpendingKind::FullAtOne;
    double step_share = 0.0;
    StepAnchor anchor = StepAnchor::Final;

    static SpendingFunction full_at_one() { return {SpendingKind::FullAtOne, 0.0, StepAnchor::Final}; }
    static SpendingFunction obf() { return {SpendingKind::Obf, 0.0, StepAnchor::Final}; }
    static SpendingFunction full_at_one_plus_step(double share, StepAnchor anchor) {
        return {SpendingKind::FullAtOnePlusStep, share, anchor};
    }
    static SpendingFunction obf_plus_step(double share, StepAnchor anchor) {
        return {SpendingKind::ObfPlusStep, share, anchor};
    }

    /// Cumulative level spent by information fraction `tau`. Both `tau` and
    /// `interim_tau` are clamped to [1e-9, 1].
    double operator()(double tau, double level, double interim_tau = 1.0) const;

    std::string describe() const;
    bool operator==(const SpendingFunction&) const = default;
};

inline constexpr double kMinInformation = 1e-9;

double clamp_information(double tau);

/// Lan-DeMets O'Brien-Fleming type spending.
double obf_spend(double tau, double level);

inline double spend(const SpendingFunction& g, double tau, double level, double interim_tau = 1.0) {
    return g(tau, level, interim_tau);
}

}  // namespace pfsos
