#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <vector>

#include "frg/basis.hpp"
#include "frg/gp.hpp"
#include "frg/kernels.hpp"
#include "frg/ode.hpp"
#include "frg/regulators.hpp"

namespace frg {

enum class FlowVariant { wetterich, wilson_polchinski };

// Collocated functional flow: the running functional is represented by a GP
// posterior mean through its values at an ensemble of collocation fields, and
// the flow equation is enforced at those fields, yielding an ODE system for
// the values.  Wetterich-Morris variant:
//   dY_i/dkappa = 1/2 sum_a dr_a(kappa) [(H(z_i) + diag(r))^{-1}]_aa,
// Wilson-Polchinski variant:
//   dY_i/dkappa = 1/2 sum_a dr_a(kappa) [H_aa(z_i) + D_a(z_i)^2],
// where H and D are the Hessian and gradient of the surrogate (prior mean
// included) in the Laplacian eigenbasis.
struct FlowProblem {
    std::shared_ptr<const BasisDescriptor> basis;
    RegulatorProfile regulator = RegulatorProfile::litim();
    std::shared_ptr<const Kernel> kernel;
    PriorMean mean = PriorMean::zero();
    Ensemble collocation;
    // Initial value of the functional at kappa_uv for a given field.
    std::function<double(const Field&)> initial;
    FlowVariant variant = FlowVariant::wilson_polchinski;
    double kappa_uv = 10.0;
    double kappa_ir = 1e-10;
    int n_t = 100;            // number of output intervals; n_t + 1 recorded scales
    double nugget = 1e-12;
    double rtol = 1e-8;
    double atol = 1e-10;
    // ldlt interpolates exactly (Gaussian benchmarks); spectral drops
    // unresolvable Gram directions, which keeps the weights bounded when the
    // flow leaves the kernel span (quartic interactions).
    GramSolver gram_solver = GramSolver::ldlt;
    ExecPolicy policy = ExecPolicy::parallel;
    bool log_kappa = false;   // integrate in ln(kappa) instead of raw kappa
};

struct FlowTrajectory {
    std::vector<double> kappas;  // n_t + 1 uniform scales, kappa_uv down to kappa_ir
    Eigen::MatrixXd Y;           // (n_t + 1) x N functional values at the collocation fields
    OdeStats stats;

    // Surrogate reconstruction state.
    std::shared_ptr<const Kernel> kernel;
    Eigen::MatrixXd Z;
    PriorMean mean;
    double nugget = 0.0;
    std::shared_ptr<const GramFactor> gram;

    GpSurrogate surrogate_at(int step) const;
};

FlowTrajectory integrate_flow(const FlowProblem& problem);

// Single right-hand-side evaluations at the collocation fields for a given
// value vector Y, ignoring problem.variant.  These rebuild the Gram
// factorization each call; the integrator amortizes it internally.
Eigen::VectorXd wetterich_rhs(const FlowProblem& problem, double kappa, const Eigen::VectorXd& Y);
Eigen::VectorXd wp_rhs(const FlowProblem& problem, double kappa, const Eigen::VectorXd& Y);

// Relative L2 error across the collocation ensemble at each sampled scale:
// ||Y_numeric - Y_exact|| / ||Y_exact||.  Entries are NaN where the exact
// norm vanishes.
Eigen::VectorXd collocation_errors(const FlowTrajectory& traj, const Ensemble& collocation,
                                   const std::function<double(const Field&, double)>& exact);

// Same, over held-out fields via the reconstructed surrogate at each scale.
Eigen::VectorXd test_errors(const FlowTrajectory& traj, const Ensemble& test,
                            const std::function<double(const Field&, double)>& exact);

const char* to_string(FlowVariant variant);

}  // namespace frg
