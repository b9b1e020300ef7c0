#pragma once

#include <Eigen/Dense>
#include <memory>

#include "frg/basis.hpp"
#include "frg/regulators.hpp"

namespace frg {

// Gaussian free field under the Wilson-Polchinski flow: Gamma_2 = -Laplacian + 1,
// closed-form cumulant-generating functional
//   W_kappa[J] = -1/2 sum_a c_a^2 / (lambda_a + 1 + r) - 1/2 sum_a ln((lambda_a + 1 + r)/(lambda_a + 1)),
// determinants truncated to the retained modes.
struct GaussianWpModel {
    std::shared_ptr<const BasisDescriptor> basis;
    RegulatorProfile regulator = RegulatorProfile::litim();
};

// Gaussian model of the Wetterich-Morris flow:
//   Gamma_kappa[phi] = 1/2 sum_a gamma (lambda_a + m2) c_a^2
//                    + 1/2 sum_a ln((gamma lambda_a + gamma m2 + r)/(gamma lambda_a + gamma m2)).
struct GaussianWetterichModel {
    std::shared_ptr<const BasisDescriptor> basis;
    RegulatorProfile regulator = RegulatorProfile::exponential();
    double gamma = 1e-3;
    double m2 = 1.0;
};

// Bare phi^4 action: continuum (exact spectral kinetic term + grid quadrature
// of the local potential) or lattice (site sums with forward differences).
struct Phi4BareAction {
    enum class Domain { continuum, lattice };
    Domain domain = Domain::continuum;
    std::shared_ptr<const BasisDescriptor> basis;
    double m2 = -1.5;
    double lambda = 1.0;
    int quadrature_points = 0;  // continuum; must be >= 8 * mode count (0 = auto)
};

double wp_exact(const GaussianWpModel& model, const Field& J, double kappa);
double wetterich_exact(const GaussianWetterichModel& model, const Field& phi, double kappa);
double bare_phi4(const Phi4BareAction& action, const Field& phi);

// Relative residual between a finite-difference kappa-derivative of the
// closed-form solution and the analytic flow right-hand side built from the
// model's field-independent Hessian.  Ground-truth gate for the flow engine.
double flow_residual(const GaussianWpModel& model, double kappa, const Field& J);
double flow_residual(const GaussianWetterichModel& model, double kappa, const Field& phi);

}  // namespace frg
