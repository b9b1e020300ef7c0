#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <vector>

#include "frg/kernels.hpp"
#include "frg/gp.hpp"
#include "frg/ode.hpp"

namespace frg {

// One-dimensional periodic phi^4 lattice: N_x sites, unit spacing, Laplacian
// eigenvalues lambda_q = 4 sin^2(pi q / N_x).
struct LatticeModel {
    int Nx = 32;
    double m2 = -1.5;
    double lambda = 1.0;

    Eigen::VectorXd eigenvalues() const;
};

// Distinct regulator-relevant eigenvalues with multiplicities, plus the domain
// volume that normalizes the per-volume potential flow (c_Omega = 1/volume).
struct ModeSpectrum {
    std::vector<std::pair<double, int>> modes;  // (eigenvalue, multiplicity)
    double volume = 1.0;

    static ModeSpectrum lattice(int Nx);
    static ModeSpectrum continuum_torus(int P);

    // S(kappa) = number of modes with lambda < kappa^2 (Litim active set).
    int active(double kappa) const;
};

int active_modes(const LatticeModel& model, double kappa);

// Uniform scalar potential samples on [-phi_max, phi_max].
struct PotentialGrid {
    double phi_max = 5.0;
    Eigen::VectorXd phi;
    Eigen::VectorXd U;

    static PotentialGrid uniform(double phi_max, int n_phi);
    int size() const { return static_cast<int>(phi.size()); }
    double spacing() const { return phi[1] - phi[0]; }
};

PotentialGrid bare_potential_grid(double m2, double lambda, double phi_max, int n_phi);

// Second-order finite-difference curvature on the uniform grid: central
// stencil inside, one-sided second-order stencils at the window edges.
Eigen::VectorXd fd_second_derivative(const PotentialGrid& grid);

// Local-potential-approximation flow with the Litim regulator:
//   d U(phi_j)/d kappa = (1/volume) kappa S(kappa) / (kappa^2 + U''(phi_j)),
// integrated from kappa_uv down to kappa_ir with curvature by finite
// differences.  Throws FlowSingularity when a denominator crosses zero.
PotentialGrid lpa_flow(const ModeSpectrum& spectrum, const PotentialGrid& init, double kappa_uv,
                       double kappa_ir, const OdeOptions& options = {});
PotentialGrid lpa_flow(const LatticeModel& model, const PotentialGrid& init, double kappa_uv,
                       double kappa_ir, const OdeOptions& options = {});

// One integration with dense output at every requested scale (descending from
// the first entry to the last).
std::vector<PotentialGrid> lpa_flow_samples(const ModeSpectrum& spectrum,
                                            const PotentialGrid& init,
                                            const std::vector<double>& kappas,
                                            const OdeOptions& options = {});

// ------------------------------------------------------------------ GP flow

struct GpFlowOptions {
    double kappa_uv = 100.0;
    double kappa_ir = 1e-10;
    int n_scales = 1000;       // recorded-scale intervals (n_scales + 1 scales)
    double sigma2 = 1.0;       // spectral kernel variance
    double eta = 0.98;         // spectral kernel floor
    double beta = 2.0;         // spectral decay exponent
    int q_max = -1;            // -1 = min(n_phi - 1, 1024)
    // Optional spectral cutoff of the predictor's curvature closure only
    // (reconstruction always keeps the full q_max).  -1 = no truncation.
    // Truncating trades stiffness for a biased closure; the default keeps the
    // closure exact and controls stiffness via fixed substeps instead.
    int closure_q_max = -1;
    // Fixed linearly-implicit (Rosenbrock) substeps per recorded scale
    // interval.  The closure Jacobian is formed explicitly, so an L-stable
    // two-stage step handles its w_q^2-stiff spectrum at any step size; an
    // interval whose denominator crosses zero or that produces a non-finite
    // state falls back to adaptive integration.  0 = always integrate each
    // interval adaptively.
    int predictor_substeps = 32;
    Eigen::Matrix2d sigma_a = Eigen::Matrix2d::Identity() * 1e-2;
    double eps = 1e-11;        // nugget
    double gamma = 1e-6;       // Tikhonov weight tying theta to theta_prev
    double theta0 = -8.0;      // initial unconstrained couplings
    int max_gn_iters = 6;
    OdeOptions ode;
    bool force_zero_rhs = false;  // testing hook: freeze the predictor
};

// IR potential in parametric-plus-remainder form:
//   U(phi) = m2 phi^2/2 + lambda phi^4/24
//          + softplus(theta2) phi^2/2 + softplus(theta4) phi^4/12
//          + sum_q beta_q cos(w_q phi),
// with analytic first and second derivatives.
struct GpFlowResult {
    PotentialGrid grid;                 // reconstructed IR values
    Eigen::Vector2d theta;              // final unconstrained couplings
    Eigen::VectorXd beta_dual;          // cosine coefficients of the remainder
    double m2 = 0.0;
    double lambda = 0.0;
    std::shared_ptr<const CosineSpectralKernel> base_kernel;
    int projections = 0;

    double U(double phi) const;
    double dU(double phi) const;
    double d2U(double phi) const;
};

double softplus(double x);

// Predictor-projector flow for the lattice local potential: adaptive
// integration between recorded scales under a GP-curvature closure, then a
// damped Gauss-Newton projection of the state onto softplus-polynomial
// couplings plus a kernel remainder.
class GpFlowEngine {
public:
    GpFlowEngine(const LatticeModel& model, const PotentialGrid& init, GpFlowOptions options);

    struct Projection {
        Eigen::Vector2d theta;
        Eigen::VectorXd Y;       // reconstructed grid values
        Eigen::VectorXd alpha;   // whitened remainder dual (A^{-1} r)
        double objective_before = 0.0;
        double objective_after = 0.0;
        int iterations = 0;
    };

    // Curvature closure used by the predictor: U'' = m0'' + C2 (K + eps)^{-1} (Y - m0).
    Eigen::VectorXd curvature(const Eigen::VectorXd& Y) const;
    Projection project(const Eigen::VectorXd& Y, const Eigen::Vector2d& theta_prev,
                       int scale_index) const;
    GpFlowResult run();

private:
    LatticeModel model_;
    GpFlowOptions opt_;
    PotentialGrid grid_;
    ModeSpectrum spectrum_;
    std::shared_ptr<const CosineSpectralKernel> base_;
    Eigen::VectorXd m0_, m0dd_;       // prior mean and its curvature on the grid
    Eigen::MatrixXd F_;               // [phi^2/2, phi^4/12]
    Eigen::MatrixXd Fdd_;             // [1, phi^2]
    Eigen::LLT<Eigen::MatrixXd> A_;   // K_U + eps I
    Eigen::MatrixXd M_;               // C2 (K^I + eps I)^{-1}
    Eigen::MatrixXd B_;               // A^{-1} F
    Eigen::Matrix2d G_;               // F^T A^{-1} F

    double objective(const Eigen::VectorXd& Y, const Eigen::Vector2d& theta,
                     const Eigen::Vector2d& theta_prev, Eigen::VectorXd* alpha_out) const;
};

GpFlowResult gp_flow(const LatticeModel& model, const PotentialGrid& init,
                     const GpFlowOptions& options = {});

// ----------------------------------------------------------- transfer matrix

struct TransferMatrixModel {
    LatticeModel model;
    Eigen::VectorXd phi;   // support nodes
    double c = 0.0;
    double phi0 = 0.0;
    Eigen::MatrixXd T2;
};

// T2_ij = exp[-1/2 ((phi_j - phi_i)^2 + U2(phi_i) + U2(phi_j))] with
// U2(phi) = m2 phi^2/2 + lambda phi^4/24 - c (phi - phi0).  When phi0 is not
// given it is chosen as the grid minimizer of the tilted potential, which
// keeps the exponents near zero for large |c|.
TransferMatrixModel transfer_matrix(const LatticeModel& model, const PotentialGrid& grid, double c);
TransferMatrixModel transfer_matrix(const LatticeModel& model, const PotentialGrid& grid, double c,
                                    double phi0);

// m(c) = Tr(Phi T2^Nx) / Tr(T2^Nx) via symmetric eigendecomposition with
// log-domain scaling of the eigenvalue powers.
double tm_magnetization(const TransferMatrixModel& tm);

// Central-difference susceptibility chi = dm/dc with relative step delta.
double tm_susceptibility(const LatticeModel& model, const PotentialGrid& grid, double c,
                         double delta = 1e-3);

// -------------------------------------------------------------- observables

// Twice-differentiable scalar potential.
struct PotentialModel {
    std::function<double(double)> U;
    std::function<double(double)> dU;
    std::function<double(double)> d2U;
};

// Natural-cubic-spline evaluators for a grid-only potential.
PotentialModel spline_potential(const PotentialGrid& grid);
PotentialModel parametric_potential(const GpFlowResult& result);

struct ObservablePoint {
    double c = 0.0;
    double m = 0.0;
    double chi = 0.0;
};

// For each source c: Newton-solve U'(m) = c from a bracket-scan start over
// [-phi_max, phi_max], require U''(m) > 0, chi = 1/U''(m).
std::vector<ObservablePoint> observables(const PotentialModel& potential,
                                         const std::vector<double>& c_grid, double phi_max);

// 18 log-spaced source values in [1e-4, 10^0.4].
std::vector<double> default_source_grid();

}  // namespace frg
