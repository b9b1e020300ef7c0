#pragma once

#include <Eigen/Dense>
#include <memory>

#include "frg/kernels.hpp"

namespace frg {

enum class ExecPolicy { serial_reference, parallel };

// Prior mean over feature vectors.  `kinetic` is the diagonal quadratic
//   mean(z) = 1/2 sum_a gamma (lambda_a + m2) z_a^2
// used with spectral features; `bare_potential` is the scalar phi^4 potential
//   mean(t) = m2 t^2/2 + lambda t^4/24
// used with scalar (constant-field) features.
struct PriorMean {
    enum class Type { zero, kinetic, bare_potential };
    Type type = Type::zero;
    double gamma = 1.0;
    double m2 = 0.0;
    double lambda_quartic = 0.0;
    Eigen::VectorXd mode_eigenvalues;  // lambda_a for the kinetic variant

    static PriorMean zero() { return {}; }
    static PriorMean kinetic(double gamma, double m2, Eigen::VectorXd mode_eigenvalues);
    static PriorMean bare_potential(double m2, double lambda_quartic);

    double value(const Eigen::VectorXd& z) const;
    Eigen::VectorXd grad(const Eigen::VectorXd& z) const;
    // All supported variants have diagonal curvature in feature coordinates.
    Eigen::VectorXd hess_diag(const Eigen::VectorXd& z) const;
    Eigen::VectorXd values(const Eigen::MatrixXd& Z) const;
};

// How the regularized Gram matrix K(Z,Z) + eps I is solved.
//   ldlt:     pivoted LDL^T.  Exact interpolation up to conditioning; data
//             components outside the kernel's numerical span come back scaled
//             by 1/eps, which is the right behaviour for interpolation
//             benchmarks but amplifies roundoff when the data genuinely
//             leaves the span.
//   spectral: symmetric eigendecomposition with a relative eigenvalue cutoff;
//             directions the kernel cannot resolve are dropped, giving the
//             minimal-norm least-squares weights.  Use when the fitted values
//             are not in the kernel span (non-Gaussian flows).
enum class GramSolver { ldlt, spectral };

// Factor of K(Z,Z) + eps I with a cheap condition estimate.  Pivoting matters
// for the LDL^T branch: low-dimensional feature kernels give Grams whose rank
// is far below N, where an unpivoted Cholesky breaks down on roundoff-level
// pivots even though the regularized matrix is SPD.
struct GramFactor {
    GramSolver solver = GramSolver::ldlt;
    Eigen::LDLT<Eigen::MatrixXd> ldlt;
    Eigen::MatrixXd V;        // spectral: eigenvectors of the regularized Gram
    Eigen::VectorXd dinv;     // spectral: 1/eigenvalue above the cutoff, else 0
    double cond_estimate = 1.0;

    template <typename Derived>
    Eigen::MatrixXd solve(const Eigen::MatrixBase<Derived>& b) const {
        if (solver == GramSolver::spectral) {
            return V * (dinv.asDiagonal() * (V.transpose() * b));
        }
        return ldlt.solve(b);
    }
};

// Throws NumericalError (with the pivot index) if the regularized Gram matrix
// is not positive definite; no pseudo-inverse fallback for the LDL^T branch.
// The spectral branch keeps eigenvalues above max(10 eps, 1e-12 lambda_max).
std::shared_ptr<const GramFactor> assemble_gram(const Kernel& kernel, const Eigen::MatrixXd& Z,
                                                double eps,
                                                ExecPolicy policy = ExecPolicy::parallel,
                                                GramSolver solver = GramSolver::ldlt);

struct GpSurrogate {
    std::shared_ptr<const Kernel> kernel;
    Eigen::MatrixXd Z;   // N x m collocation features
    Eigen::VectorXd w;   // (K + eps I)^{-1} (Y - mean(Z))
    PriorMean mean;
    double nugget = 0.0;
    std::shared_ptr<const GramFactor> gram;

    double predict(const Eigen::VectorXd& z) const;
    Eigen::VectorXd grad(const Eigen::VectorXd& z) const;
    Eigen::MatrixXd hessian(const Eigen::VectorXd& z) const;
    // Valid for additive kernels (diagonal kernel Hessian); includes the
    // prior-mean curvature.
    Eigen::VectorXd hessian_diag(const Eigen::VectorXd& z) const;
};

GpSurrogate fit(std::shared_ptr<const Kernel> kernel, const Eigen::MatrixXd& Z,
                const Eigen::VectorXd& Y, const PriorMean& mean, double eps,
                ExecPolicy policy = ExecPolicy::parallel);

// Refit with a precomputed factorization (the Gram matrix depends only on Z).
GpSurrogate fit_with_factor(std::shared_ptr<const Kernel> kernel, const Eigen::MatrixXd& Z,
                            const Eigen::VectorXd& Y, const PriorMean& mean, double eps,
                            std::shared_ptr<const GramFactor> gram);

// U''(phi) of a scalar GP posterior mean: prior-mean curvature plus the
// weighted second kernel derivative in the first argument.
double local_curvature(const GpSurrogate& surrogate, double phi);

}  // namespace frg
