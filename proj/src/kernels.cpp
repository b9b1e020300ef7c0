#include "frg/kernels.hpp"

#include <cmath>

#include "frg/errors.hpp"

namespace frg {

void Kernel::check_dims(const Eigen::VectorXd& z, const Eigen::VectorXd& zp) const {
    if (z.size() != zp.size()) throw ValidationError("kernel argument dimension mismatch");
}

// ---------------------------------------------------------------- quadratic

double QuadraticFeatureKernel::eval(const Eigen::VectorXd& z, const Eigen::VectorXd& zp) const {
    check_dims(z, zp);
    double sum = 0.0;
    for (Eigen::Index a = 0; a < z.size(); ++a) {
        const double t = z[a] * zp[a] + 1.0;
        sum += t * t;
    }
    return sum;
}

Eigen::VectorXd QuadraticFeatureKernel::grad1(const Eigen::VectorXd& z,
                                              const Eigen::VectorXd& zp) const {
    check_dims(z, zp);
    return (2.0 * (z.array() * zp.array() + 1.0) * zp.array()).matrix();
}

Eigen::VectorXd QuadraticFeatureKernel::hess1_diag(const Eigen::VectorXd& z,
                                                   const Eigen::VectorXd& zp) const {
    check_dims(z, zp);
    return (2.0 * zp.array().square()).matrix();
}

Eigen::MatrixXd QuadraticFeatureKernel::hess1(const Eigen::VectorXd& z,
                                              const Eigen::VectorXd& zp) const {
    return hess1_diag(z, zp).asDiagonal();
}

// ------------------------------------------------------------- additive-lpa

AdditiveLpaKernel::AdditiveLpaKernel(double sigma) : sigma_(sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw ValidationError("additive-lpa length-scale sigma must be positive and finite");
    }
}

double AdditiveLpaKernel::rbf(double u, double up) const {
    const double d = u - up;
    return std::exp(-d * d / (2.0 * sigma_ * sigma_));
}

double AdditiveLpaKernel::rbf_d1(double u, double up) const {
    const double d = u - up;
    return -(d / (sigma_ * sigma_)) * rbf(u, up);
}

double AdditiveLpaKernel::rbf_d11(double u, double up) const {
    const double d = u - up;
    const double s2 = sigma_ * sigma_;
    return (d * d / (s2 * s2) - 1.0 / s2) * rbf(u, up);
}

double AdditiveLpaKernel::scalar_eval(double u, double up) const {
    const double prod = u * up;
    return 1.0 + prod + prod * prod + rbf(u, up);
}

double AdditiveLpaKernel::scalar_d1(double u, double up) const {
    return up + 2.0 * u * up * up + rbf_d1(u, up);
}

double AdditiveLpaKernel::scalar_d11(double u, double up) const {
    return 2.0 * up * up + rbf_d11(u, up);
}

double AdditiveLpaKernel::eval(const Eigen::VectorXd& z, const Eigen::VectorXd& zp) const {
    check_dims(z, zp);
    double sum = 0.0;
    for (Eigen::Index a = 0; a < z.size(); ++a) sum += scalar_eval(z[a], zp[a]);
    return sum;
}

Eigen::VectorXd AdditiveLpaKernel::grad1(const Eigen::VectorXd& z, const Eigen::VectorXd& zp) const {
    check_dims(z, zp);
    Eigen::VectorXd out(z.size());
    for (Eigen::Index a = 0; a < z.size(); ++a) out[a] = scalar_d1(z[a], zp[a]);
    return out;
}

Eigen::VectorXd AdditiveLpaKernel::hess1_diag(const Eigen::VectorXd& z,
                                              const Eigen::VectorXd& zp) const {
    check_dims(z, zp);
    Eigen::VectorXd out(z.size());
    for (Eigen::Index a = 0; a < z.size(); ++a) out[a] = scalar_d11(z[a], zp[a]);
    return out;
}

Eigen::MatrixXd AdditiveLpaKernel::hess1(const Eigen::VectorXd& z, const Eigen::VectorXd& zp) const {
    return hess1_diag(z, zp).asDiagonal();
}

// ---------------------------------------------------------- cosine-spectral

CosineSpectralKernel::CosineSpectralKernel(double sigma2, double eta, double beta, int q_max,
                                           double phi_max)
    : q_max_(q_max), phi_max_(phi_max) {
    if (!(sigma2 > 0.0) || !(phi_max > 0.0) || q_max < 0) {
        throw ValidationError("cosine-spectral kernel requires sigma2 > 0, phi_max > 0, Q_max >= 0");
    }
    s_.resize(static_cast<std::size_t>(q_max + 1));
    w_.resize(static_cast<std::size_t>(q_max + 1));
    for (int q = 0; q <= q_max; ++q) {
        const double wq = M_PI * q / phi_max;
        w_[static_cast<std::size_t>(q)] = wq;
        s_[static_cast<std::size_t>(q)] = sigma2 * std::pow(eta * eta + wq * wq, -beta);
    }
}

double CosineSpectralKernel::scalar_eval(double t, double tp) const {
    double sum = 0.0;
    for (int q = 0; q <= q_max_; ++q) {
        const std::size_t k = static_cast<std::size_t>(q);
        // The cosines are multiplied together first so eval(t, t') and
        // eval(t', t) round identically.
        sum += s_[k] * (std::cos(w_[k] * t) * std::cos(w_[k] * tp));
    }
    return sum;
}

double CosineSpectralKernel::scalar_d1(double t, double tp) const {
    double sum = 0.0;
    for (int q = 1; q <= q_max_; ++q) {
        const std::size_t k = static_cast<std::size_t>(q);
        sum -= s_[k] * w_[k] * std::sin(w_[k] * t) * std::cos(w_[k] * tp);
    }
    return sum;
}

double CosineSpectralKernel::scalar_d11(double t, double tp) const {
    double sum = 0.0;
    for (int q = 1; q <= q_max_; ++q) {
        const std::size_t k = static_cast<std::size_t>(q);
        sum -= s_[k] * w_[k] * w_[k] * std::cos(w_[k] * t) * std::cos(w_[k] * tp);
    }
    return sum;
}

double CosineSpectralKernel::eval(const Eigen::VectorXd& z, const Eigen::VectorXd& zp) const {
    check_dims(z, zp);
    if (z.size() != 1) throw ValidationError("cosine-spectral kernel acts on scalar features");
    return scalar_eval(z[0], zp[0]);
}

Eigen::VectorXd CosineSpectralKernel::grad1(const Eigen::VectorXd& z,
                                            const Eigen::VectorXd& zp) const {
    check_dims(z, zp);
    Eigen::VectorXd out(1);
    out[0] = scalar_d1(z[0], zp[0]);
    return out;
}

Eigen::MatrixXd CosineSpectralKernel::hess1(const Eigen::VectorXd& z,
                                            const Eigen::VectorXd& zp) const {
    check_dims(z, zp);
    Eigen::MatrixXd out(1, 1);
    out(0, 0) = scalar_d11(z[0], zp[0]);
    return out;
}

// --------------------------------------------------------- linear-surrogate

namespace {
Eigen::Vector2d poly_features(double t) {
    return Eigen::Vector2d(t * t / 2.0, t * t * t * t / 12.0);
}
Eigen::Vector2d poly_features_d1(double t) {
    return Eigen::Vector2d(t, t * t * t / 3.0);
}
Eigen::Vector2d poly_features_d11(double t) { return Eigen::Vector2d(1.0, t * t); }
}  // namespace

LinearSurrogateKernel::LinearSurrogateKernel(const Eigen::Matrix2d& sigma_a,
                                             std::shared_ptr<const CosineSpectralKernel> base)
    : sigma_a_(sigma_a), base_(std::move(base)) {
    if ((sigma_a_ - sigma_a_.transpose()).cwiseAbs().maxCoeff() > 0.0) {
        throw ValidationError("Sigma_a must be symmetric");
    }
    Eigen::LLT<Eigen::Matrix2d> llt(sigma_a_);
    if (llt.info() != Eigen::Success) throw ValidationError("Sigma_a must be positive definite");
}

double LinearSurrogateKernel::scalar_eval(double t, double tp) const {
    return poly_features(t).dot(sigma_a_ * poly_features(tp)) + base_->scalar_eval(t, tp);
}

double LinearSurrogateKernel::scalar_d11(double t, double tp) const {
    return poly_features_d11(t).dot(sigma_a_ * poly_features(tp)) + base_->scalar_d11(t, tp);
}

double LinearSurrogateKernel::eval(const Eigen::VectorXd& z, const Eigen::VectorXd& zp) const {
    check_dims(z, zp);
    if (z.size() != 1) throw ValidationError("linear-surrogate kernel acts on scalar features");
    return scalar_eval(z[0], zp[0]);
}

Eigen::VectorXd LinearSurrogateKernel::grad1(const Eigen::VectorXd& z,
                                             const Eigen::VectorXd& zp) const {
    check_dims(z, zp);
    Eigen::VectorXd out(1);
    out[0] = poly_features_d1(z[0]).dot(sigma_a_ * poly_features(zp[0])) +
             base_->scalar_d1(z[0], zp[0]);
    return out;
}

Eigen::MatrixXd LinearSurrogateKernel::hess1(const Eigen::VectorXd& z,
                                             const Eigen::VectorXd& zp) const {
    check_dims(z, zp);
    Eigen::MatrixXd out(1, 1);
    out(0, 0) = scalar_d11(z[0], zp[0]);
    return out;
}

}  // namespace frg
