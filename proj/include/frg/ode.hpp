#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace frg {

struct OdeOptions {
    double rtol = 1e-8;
    double atol = 1e-10;
    double initial_step = 0.0;  // 0 = automatic
    long max_steps = 20'000'000;
    // After this many consecutive rejections the stepper takes one implicit
    // trapezoidal (fixed-point) step at the current step size and resumes.
    int fallback_after_rejections = 10;
    bool enable_trapezoid_fallback = true;
};

struct OdeStats {
    long steps = 0;
    long rejected = 0;
    long rhs_evals = 0;
    long trapezoid_steps = 0;
};

using OdeRhs = std::function<void(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dydt)>;

struct OdeResult {
    Eigen::MatrixXd samples;  // one row per requested sample time
    OdeStats stats;
};

// Integrates y' = f(t, y) from t0 to t1 (either direction) with the
// Dormand-Prince embedded 5(4) pair, PI step-size control, and 4th-order
// dense output at `sample_ts` (monotone from t0 toward t1; endpoints allowed).
// `breakpoints` are interior times where the right-hand side is known to be
// non-smooth (e.g. Litim activation thresholds); integration restarts there
// so no step straddles a kink.  Throws IntegrationFailure on step-size
// underflow or exhausted step budget, NumericalError on non-finite state.
OdeResult integrate_ode(const OdeRhs& rhs, double t0, double t1, const Eigen::VectorXd& y0,
                        const std::vector<double>& sample_ts, const OdeOptions& options = {},
                        const std::vector<double>& breakpoints = {});

}  // namespace frg
