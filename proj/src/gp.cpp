#include "frg/gp.hpp"

#include <cmath>
#include <string>

#include "frg/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace frg {

PriorMean PriorMean::kinetic(double gamma, double m2, Eigen::VectorXd mode_eigenvalues) {
    PriorMean mean;
    mean.type = Type::kinetic;
    mean.gamma = gamma;
    mean.m2 = m2;
    mean.mode_eigenvalues = std::move(mode_eigenvalues);
    return mean;
}

PriorMean PriorMean::bare_potential(double m2, double lambda_quartic) {
    PriorMean mean;
    mean.type = Type::bare_potential;
    mean.m2 = m2;
    mean.lambda_quartic = lambda_quartic;
    return mean;
}

double PriorMean::value(const Eigen::VectorXd& z) const {
    switch (type) {
        case Type::zero: return 0.0;
        case Type::kinetic: {
            if (z.size() != mode_eigenvalues.size()) {
                throw ValidationError("kinetic prior mean: feature dimension mismatch");
            }
            return 0.5 * (gamma * (mode_eigenvalues.array() + m2) * z.array().square()).sum();
        }
        case Type::bare_potential: {
            if (z.size() != 1) throw ValidationError("bare-potential prior mean acts on scalars");
            const double t = z[0];
            return m2 * t * t / 2.0 + lambda_quartic * t * t * t * t / 24.0;
        }
    }
    return 0.0;
}

Eigen::VectorXd PriorMean::grad(const Eigen::VectorXd& z) const {
    switch (type) {
        case Type::zero: return Eigen::VectorXd::Zero(z.size());
        case Type::kinetic:
            return (gamma * (mode_eigenvalues.array() + m2) * z.array()).matrix();
        case Type::bare_potential: {
            Eigen::VectorXd g(1);
            const double t = z[0];
            g[0] = m2 * t + lambda_quartic * t * t * t / 6.0;
            return g;
        }
    }
    return Eigen::VectorXd::Zero(z.size());
}

Eigen::VectorXd PriorMean::hess_diag(const Eigen::VectorXd& z) const {
    switch (type) {
        case Type::zero: return Eigen::VectorXd::Zero(z.size());
        case Type::kinetic: return (gamma * (mode_eigenvalues.array() + m2)).matrix();
        case Type::bare_potential: {
            Eigen::VectorXd h(1);
            const double t = z[0];
            h[0] = m2 + lambda_quartic * t * t / 2.0;
            return h;
        }
    }
    return Eigen::VectorXd::Zero(z.size());
}

Eigen::VectorXd PriorMean::values(const Eigen::MatrixXd& Z) const {
    Eigen::VectorXd out(Z.rows());
    for (Eigen::Index i = 0; i < Z.rows(); ++i) out[i] = value(Z.row(i).transpose());
    return out;
}

std::shared_ptr<const GramFactor> assemble_gram(const Kernel& kernel, const Eigen::MatrixXd& Z,
                                                double eps, ExecPolicy policy, GramSolver solver) {
    if (!(eps > 0.0)) throw ValidationError("nugget must be positive");
    const Eigen::Index n = Z.rows();
    if (n < 1) throw ValidationError("Gram assembly needs at least one collocation row");

    Eigen::MatrixXd K(n, n);
    // Rows are independent; each row is filled by one task so the result is
    // identical under any thread count.
    const bool run_parallel = policy == ExecPolicy::parallel;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (run_parallel)
#endif
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd zi = Z.row(i).transpose();
        for (Eigen::Index j = 0; j <= i; ++j) {
            K(i, j) = kernel.eval(zi, Z.row(j).transpose());
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) K(i, j) = K(j, i);
    }
    K.diagonal().array() += eps;

    auto factor = std::make_shared<GramFactor>();
    factor->solver = solver;
    if (solver == GramSolver::spectral) {
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
        if (eig.info() != Eigen::Success) {
            throw NumericalError("Gram eigendecomposition failed");
        }
        const Eigen::VectorXd& d = eig.eigenvalues();
        const double dmax = d.maxCoeff();
        if (!std::isfinite(dmax) || !(dmax > 0.0)) {
            throw NumericalError("Gram matrix has no positive eigenvalues");
        }
        if (d.minCoeff() < -1e-8 * std::max(1.0, dmax)) {
            throw NumericalError("Gram matrix not positive definite after nugget");
        }
        const double cutoff = std::max(10.0 * eps, 1e-12 * dmax);
        factor->V = eig.eigenvectors();
        factor->dinv = (d.array() > cutoff).select(d.array().inverse(), 0.0);
        factor->cond_estimate = dmax / cutoff;
        return factor;
    }
    factor->ldlt.compute(K);
    const Eigen::VectorXd d = factor->ldlt.vectorD();
    const double dmax = d.allFinite() ? d.maxCoeff() : std::nan("");
    // info() is ignored on purpose: Eigen flags NumericalIssue whenever it
    // meets a roundoff-negative pivot, which is routine for these matrices.
    // The pivot magnitudes below are the real acceptance test.
    if (!std::isfinite(dmax) || !(dmax > 0.0)) {
        throw NumericalError("Gram factorization failed (pivot 0)");
    }
    // Pivots at roundoff level are legitimate for rank-deficient kernels;
    // anything decisively negative means the matrix is not PSD.
    Eigen::Index pivot;
    const double dmin = d.minCoeff(&pivot);
    if (dmin < -1e-8 * std::max(1.0, dmax)) {
        throw NumericalError("Gram matrix not positive definite after nugget (pivot " +
                             std::to_string(pivot) + ")");
    }
    factor->cond_estimate = dmax / std::max(dmin, std::max(eps, dmax * 1e-16));
    return factor;
}

GpSurrogate fit(std::shared_ptr<const Kernel> kernel, const Eigen::MatrixXd& Z,
                const Eigen::VectorXd& Y, const PriorMean& mean, double eps, ExecPolicy policy) {
    return fit_with_factor(kernel, Z, Y, mean, eps, assemble_gram(*kernel, Z, eps, policy));
}

GpSurrogate fit_with_factor(std::shared_ptr<const Kernel> kernel, const Eigen::MatrixXd& Z,
                            const Eigen::VectorXd& Y, const PriorMean& mean, double eps,
                            std::shared_ptr<const GramFactor> gram) {
    if (Y.size() != Z.rows()) throw ValidationError("fit: |Y| must equal the number of rows of Z");
    GpSurrogate s;
    s.kernel = std::move(kernel);
    s.Z = Z;
    s.mean = mean;
    s.nugget = eps;
    s.gram = std::move(gram);
    s.w = s.gram->solve(Y - mean.values(Z));
    return s;
}

double GpSurrogate::predict(const Eigen::VectorXd& z) const {
    if (z.size() != Z.cols()) throw ValidationError("predict: feature dimension mismatch");
    double value = mean.value(z);
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        value += w[i] * kernel->eval(z, Z.row(i).transpose());
    }
    return value;
}

Eigen::VectorXd GpSurrogate::grad(const Eigen::VectorXd& z) const {
    if (z.size() != Z.cols()) throw ValidationError("grad: feature dimension mismatch");
    Eigen::VectorXd g = mean.grad(z);
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        g += w[i] * kernel->grad1(z, Z.row(i).transpose());
    }
    return g;
}

Eigen::MatrixXd GpSurrogate::hessian(const Eigen::VectorXd& z) const {
    if (z.size() != Z.cols()) throw ValidationError("hessian: feature dimension mismatch");
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(z.size(), z.size());
    H.diagonal() = mean.hess_diag(z);
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        H += w[i] * kernel->hess1(z, Z.row(i).transpose());
    }
    // Symmetric by construction for all supported kernels; enforce exactly.
    return ((H + H.transpose()) / 2.0).eval();
}

Eigen::VectorXd GpSurrogate::hessian_diag(const Eigen::VectorXd& z) const {
    Eigen::VectorXd h = mean.hess_diag(z);
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        h += w[i] * kernel->hess1_diag(z, Z.row(i).transpose());
    }
    return h;
}

double local_curvature(const GpSurrogate& surrogate, double phi) {
    Eigen::VectorXd z(1);
    z[0] = phi;
    return surrogate.hessian(z)(0, 0);
}

}  // namespace frg
