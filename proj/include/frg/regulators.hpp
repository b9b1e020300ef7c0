#pragma once

#include <string>

namespace frg {

// Scale-dependent spectral regulator profile r_kappa(lambda).
//   litim:        r = (kappa^2 - lambda)_+,  d_kappa r = 2 kappa 1{lambda < kappa^2}
//                 (the boundary lambda = kappa^2 counts as inactive).
//   exponential:  r = lambda^alpha / (e^x - 1) with x = (lambda/kappa^2)^alpha,
//                 d_kappa r = 2 alpha lambda^alpha x e^x / (kappa (e^x - 1)^2).
struct RegulatorProfile {
    enum class Type { litim, exponential };
    Type type = Type::litim;
    double alpha = 1.0;

    static RegulatorProfile litim() { return {Type::litim, 1.0}; }
    static RegulatorProfile exponential(double alpha = 1.0) { return {Type::exponential, alpha}; }
};

double reg_r(const RegulatorProfile& profile, double lambda, double kappa);
double reg_dr_dkappa(const RegulatorProfile& profile, double lambda, double kappa);

const char* to_string(RegulatorProfile::Type type);

}  // namespace frg
