#include "frg/regulators.hpp"

#include <cmath>

#include "frg/errors.hpp"

namespace frg {

namespace {

void check_args(const RegulatorProfile& profile, double lambda, double kappa) {
    if (!(kappa > 0.0)) throw ValidationError("regulator requires kappa > 0");
    if (lambda < 0.0) throw ValidationError("regulator requires lambda >= 0");
    if (profile.type == RegulatorProfile::Type::exponential && !(profile.alpha > 0.0)) {
        throw ValidationError("exponential regulator requires alpha > 0");
    }
}

// Laurent expansion threshold: below this, x/(e^x - 1) is evaluated as
// 1 - x/2 + x^2/12 to avoid catastrophic cancellation.
constexpr double kSmallX = 1e-6;
// Above this, e^{-x} forms are used so nothing overflows.
constexpr double kLargeX = 30.0;

}  // namespace

double reg_r(const RegulatorProfile& profile, double lambda, double kappa) {
    check_args(profile, lambda, kappa);
    if (profile.type == RegulatorProfile::Type::litim) {
        const double v = kappa * kappa - lambda;
        return v > 0.0 ? v : 0.0;
    }
    const double a = profile.alpha;
    const double x = std::pow(lambda / (kappa * kappa), a);
    if (x < kSmallX) {
        // lambda^a / x = kappa^{2a}; r -> kappa^{2a} (1 - x/2 + x^2/12).
        return std::pow(kappa, 2.0 * a) * (1.0 - x / 2.0 + x * x / 12.0);
    }
    const double la = std::pow(lambda, a);
    if (x > kLargeX) {
        const double emx = std::exp(-x);
        return la * emx / (1.0 - emx);
    }
    return la / std::expm1(x);
}

double reg_dr_dkappa(const RegulatorProfile& profile, double lambda, double kappa) {
    check_args(profile, lambda, kappa);
    if (profile.type == RegulatorProfile::Type::litim) {
        return lambda < kappa * kappa ? 2.0 * kappa : 0.0;
    }
    const double a = profile.alpha;
    const double x = std::pow(lambda / (kappa * kappa), a);
    if (x < kSmallX) {
        // x e^x/(e^x-1)^2 = (1/x)(1 - x^2/12 + O(x^4)); lambda^a / x = kappa^{2a}.
        return 2.0 * a * std::pow(kappa, 2.0 * a) / kappa * (1.0 - x * x / 12.0);
    }
    const double la = std::pow(lambda, a);
    if (x > kLargeX) {
        const double emx = std::exp(-x);
        const double denom = 1.0 - emx;
        return 2.0 * a * la * x * emx / (kappa * denom * denom);
    }
    const double em1 = std::expm1(x);
    return 2.0 * a * la * x * (em1 + 1.0) / (kappa * em1 * em1);
}

const char* to_string(RegulatorProfile::Type type) {
    return type == RegulatorProfile::Type::litim ? "litim" : "exponential";
}

}  // namespace frg
