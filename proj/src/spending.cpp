#include "pfsos/spending.hpp"

#include "pfsos/normal.hpp"

#include <algorithm>
#include <cmath>

namespace pfsos {

double clamp_information(double tau) {
    if (std::isnan(tau)) return kMinInformation;
    return std::clamp(tau, kMinInformation, 1.0);
}

double obf_spend(double tau, double level) {
    if (level <= 0.0) return 0.0;
    const double s = clamp_information(tau);
    if (s >= 1.0) return level;
    return 2.0 * norm_sf(norm_quantile(1.0 - level / 2.0) / std::sqrt(s));
}

double SpendingFunction::operator()(double tau, double level, double interim_tau) const {
    const double s = clamp_information(tau);
    const double s0 = anchor == StepAnchor::Interim ? clamp_information(interim_tau) : 1.0;
    const double step = s >= s0 ? step_share * level : 0.0;
    const double rest = (1.0 - step_share) * level;
    switch (kind) {
        case SpendingKind::FullAtOne:
            return s >= 1.0 ? level : 0.0;
        case SpendingKind::Obf:
            return obf_spend(s, level);
        case SpendingKind::FullAtOnePlusStep:
            return step + (s >= 1.0 ? rest : 0.0);
        case SpendingKind::ObfPlusStep:
            return step + obf_spend(s, rest);
    }
    return 0.0;
}

std::string SpendingFunction::describe() const {
    const std::string where = anchor == StepAnchor::Interim ? "interim" : "final";
    switch (kind) {
        case SpendingKind::FullAtOne:
            return "full_at_one";
        case SpendingKind::Obf:
            return "obf";
        case SpendingKind::FullAtOnePlusStep:
            return "full_at_one_plus_step(share=" + std::to_string(step_share) + ", at=" + where + ")";
        case SpendingKind::ObfPlusStep:
            return "obf_plus_step(share=" + std::to_string(step_share) + ", at=" + where + ")";
    }
    return "unknown";
}

}  // namespace pfsos
