#include "pfsos/multistate.hpp"

#include "pfsos/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pfsos {

void TransitionIntensities::validate() const {
    if (!(lambda01 >= 0.0) || !(lambda02 >= 0.0) || !(lambda12 >= 0.0)) {
        throw InvalidModel("transition intensities must be non-negative");
    }
    if (!(lambda01 + lambda02 > 0.0)) {
        throw InvalidModel("lambda01 + lambda02 must be positive");
    }
}

void ArmModel::validate() const {
    if (!(weight >= 0.0 && weight <= 1.0)) {
        throw InvalidModel("arm weight must lie in [0, 1]");
    }
    control.validate();
    effective_intensities(*this, 1).validate();
}

void FrailtySpec::validate() const {
    if (!(shape > 0.0) || !(rate > 0.0)) {
        throw InvalidModel("frailty shape and rate must be positive");
    }
}

void RecruitmentSpec::validate() const {
    if (!(per_arm_rate > 0.0)) throw InvalidModel("recruitment rate must be positive");
    if (max_per_arm < 1) throw InvalidModel("max_per_arm must be at least 1");
}

void DropoutSpec::validate() const {
    if (!(rate >= 0.0)) throw InvalidModel("drop-out rate must be non-negative");
}

void CohortModel::validate() const {
    arms.validate();
    frailty.validate();
    recruitment.validate();
    dropout.validate();
    if (experimental_z != 0 && experimental_z != 1) {
        throw InvalidModel("experimental_z must be 0 or 1");
    }
}

TransitionIntensities CohortModel::intensities_for(int z) const {
    return effective_intensities(arms, z == experimental_z ? 1 : 0);
}

TransitionIntensities effective_intensities(const ArmModel& model, int arm) {
    if (arm == 0) return model.control;
    const auto blend = [&](double c, double e) { return c - model.weight * (c - e); };
    TransitionIntensities out{blend(model.control.lambda01, model.experimental_target.lambda01),
                              blend(model.control.lambda02, model.experimental_target.lambda02),
                              blend(model.control.lambda12, model.experimental_target.lambda12)};
    if (out.lambda01 < 0.0 || out.lambda02 < 0.0 || out.lambda12 < 0.0) {
        throw InvalidModel("effective experimental intensity is negative");
    }
    return out;
}

PatientPath sample_path(const TransitionIntensities& intensities, const FrailtySpec& frailty,
                        const DropoutSpec& dropout, CounterRng& rng, double frailty_override) {
    const double u_stay = rng.uniform();
    const double u_branch = rng.uniform();
    const double u_ill = rng.uniform();
    const double u_drop = rng.uniform();

    const double exit_rate = intensities.lambda01 + intensities.lambda02;
    const double first = CounterRng::exponential_from(u_stay, exit_rate);
    const bool progresses = u_branch * exit_rate < intensities.lambda01;

    PatientPath path;
    path.t_pfs = first;
    path.t_os = progresses ? first + CounterRng::exponential_from(u_ill, intensities.lambda12)
                           : first;
    path.dropout = CounterRng::exponential_from(u_drop, dropout.rate);

    if (frailty_override > 0.0) {
        path.frailty = frailty_override;
    } else if (frailty.enabled) {
        path.frailty = rng.gamma(frailty.shape, frailty.rate);
    }
    if (path.frailty != 1.0) {
        path.t_pfs /= path.frailty;
        path.t_os /= path.frailty;
    }
    return path;
}

Cohort simulate_cohort(const CohortModel& model, std::size_t total_n, std::uint64_t seed,
                       std::uint64_t replication) {
    const std::size_t cap = model.recruitment.max_per_arm;
    const std::size_t per_arm[2] = {std::min((total_n + 1) / 2, cap), std::min(total_n / 2, cap)};
    const TransitionIntensities rates[2] = {model.intensities_for(0), model.intensities_for(1)};

    Cohort cohort;
    cohort.reserve(per_arm[0] + per_arm[1]);
    const std::size_t rounds = std::max(per_arm[0], per_arm[1]);
    for (std::size_t k = 0; k < rounds; ++k) {
        for (int arm = 0; arm < 2; ++arm) {
            if (k >= per_arm[arm]) continue;
            CounterRng rng(seed, replication, cohort.size());
            PatientPath p = sample_path(rates[arm], model.frailty, model.dropout, rng);
            p.arm = arm;
            p.entry = grid_entry(k, model.recruitment.per_arm_rate);
            cohort.push_back(p);
        }
    }
    return cohort;
}

}  // namespace pfsos
