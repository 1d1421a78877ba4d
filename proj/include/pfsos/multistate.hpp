#pragma once

#include "pfsos/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace pfsos {

/// Constant intensities of the illness-death model:
/// 0 -> 1 (progression), 0 -> 2 (death without progression), 1 -> 2.
struct TransitionIntensities {
    double lambda01 = 0.0;
    double lambda02 = 0.0;
    double lambda12 = 0.0;

    /// Throws InvalidModel on a negative rate or when state 0 is absorbing.
    void validate() const;

    bool operator==(const TransitionIntensities&) const = default;
};

/// Control intensities plus the experimental target; the effective
/// experimental intensities move from control towards the target by `weight`.
struct ArmModel {
    TransitionIntensities control;
    TransitionIntensities experimental_target;
    double weight = 1.0;

    void validate() const;
};

struct FrailtySpec {
    bool enabled = false;
    double shape = 10.0;
    double rate = 10.0;

    double mean() const { return shape / rate; }
    void validate() const;
};

struct RecruitmentSpec {
    double per_arm_rate = 25.0;
    std::size_t max_per_arm = 800;

    void validate() const;
};

struct DropoutSpec {
    double rate = 0.0;

    void validate() const;
};

/// Latent outcome of one patient. Event and drop-out times are measured
/// from study entry; `entry` is a calendar time.
struct PatientPath {
    int arm = 0;
    double entry = 0.0;
    double t_pfs = 0.0;
    double t_os = 0.0;
    double dropout = 0.0;
    double frailty = 1.0;
};

using Cohort = std::vector<PatientPath>;

/// Everything needed to draw a cohort.
struct CohortModel {
    ArmModel arms;
    FrailtySpec frailty;
    RecruitmentSpec recruitment;
    DropoutSpec dropout;
    /// Treatment indicator assigned to patients following the experimental
    /// intensities; the other arm follows the control intensities.
    int experimental_z = 1;

    void validate() const;
    /// Intensities followed by patients with treatment indicator `z`.
    TransitionIntensities intensities_for(int z) const;
};

/// Arm 0 gets the control intensities, arm 1 gets
/// control - weight * (control - experimental_target), componentwise.
TransitionIntensities effective_intensities(const ArmModel& model, int arm);

/// Draws one patient path. The stream is consumed in a fixed order (state-0
/// sojourn, branch, state-1 sojourn, drop-out, then frailty), so enabling
/// frailty only rescales the event times of an otherwise identical path.
/// `frailty_override`, when positive, replaces the gamma draw.
PatientPath sample_path(const TransitionIntensities& intensities, const FrailtySpec& frailty,
                        const DropoutSpec& dropout, CounterRng& rng,
                        double frailty_override = 0.0);

/// Entry date of the k-th (0-based) patient of an arm on the even grid.
inline double grid_entry(std::size_t k, double per_arm_rate) {
    return static_cast<double>(k) / per_arm_rate;
}

/// Simulates `total_n` patients (split evenly, arm 0 taking the odd one),
/// capped at max_per_arm per arm. Patients alternate arm 0, arm 1 in entry
/// order; patient i draws from the stream keyed by (seed, replication, i).
Cohort simulate_cohort(const CohortModel& model, std::size_t total_n, std::uint64_t seed,
                       std::uint64_t replication);

}  // namespace pfsos
