#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>

namespace frg {

// Positive-definite kernel on feature vectors with analytic derivatives in the
// first argument.  Kernels whose value is a sum of per-coordinate terms report
// additive() == true; their first-argument Hessian is diagonal, which the flow
// engine exploits.
class Kernel {
public:
    virtual ~Kernel() = default;
    virtual std::string name() const = 0;
    virtual double eval(const Eigen::VectorXd& z, const Eigen::VectorXd& zp) const = 0;
    virtual Eigen::VectorXd grad1(const Eigen::VectorXd& z, const Eigen::VectorXd& zp) const = 0;
    virtual Eigen::MatrixXd hess1(const Eigen::VectorXd& z, const Eigen::VectorXd& zp) const = 0;
    virtual bool additive() const { return false; }
    virtual Eigen::VectorXd hess1_diag(const Eigen::VectorXd& z, const Eigen::VectorXd& zp) const {
        return hess1(z, zp).diagonal();
    }

protected:
    void check_dims(const Eigen::VectorXd& z, const Eigen::VectorXd& zp) const;
};

// k(z, z') = sum_a (z_a z'_a + 1)^2.  Additive; exactly reproduces diagonal
// quadratics plus constants, which is what makes the Gaussian flow benchmarks
// interpolate to nugget accuracy.
class QuadraticFeatureKernel final : public Kernel {
public:
    std::string name() const override { return "quadratic-feature"; }
    double eval(const Eigen::VectorXd& z, const Eigen::VectorXd& zp) const override;
    Eigen::VectorXd grad1(const Eigen::VectorXd& z, const Eigen::VectorXd& zp) const override;
    Eigen::MatrixXd hess1(const Eigen::VectorXd& z, const Eigen::VectorXd& zp) const override;
    Eigen::VectorXd hess1_diag(const Eigen::VectorXd& z, const Eigen::VectorXd& zp) const override;
    bool additive() const override { return true; }
};

// K(z, z') = sum_a [1 + z_a z'_a + (z_a z'_a)^2 + exp(-(z_a - z'_a)^2 / 2 sigma^2)].
// On scalars this is the local-potential kernel K_U(u, u') used by the
// continuum phi^4 surrogate.
class AdditiveLpaKernel final : public Kernel {
public:
    explicit AdditiveLpaKernel(double sigma);
    std::string name() const override { return "additive-lpa"; }
    double eval(const Eigen::VectorXd& z, const Eigen::VectorXd& zp) const override;
    Eigen::VectorXd grad1(const Eigen::VectorXd& z, const Eigen::VectorXd& zp) const override;
    Eigen::MatrixXd hess1(const Eigen::VectorXd& z, const Eigen::VectorXd& zp) const override;
    Eigen::VectorXd hess1_diag(const Eigen::VectorXd& z, const Eigen::VectorXd& zp) const override;
    bool additive() const override { return true; }

    double sigma() const { return sigma_; }
    // Scalar pieces, exposed for the integrated functional kernel.
    double scalar_eval(double u, double up) const;
    double scalar_d1(double u, double up) const;
    double scalar_d11(double u, double up) const;
    double rbf(double u, double up) const;
    double rbf_d1(double u, double up) const;
    double rbf_d11(double u, double up) const;

private:
    double sigma_;
};

// Even cosine-spectral kernel on a scalar field window [-phi_max, phi_max]:
//   K_U(t, t') = sum_{q=0}^{Qmax} sigma^2 (eta^2 + (pi q/phi_max)^2)^{-beta}
//                cos(pi q t/phi_max) cos(pi q t'/phi_max).
class CosineSpectralKernel final : public Kernel {
public:
    CosineSpectralKernel(double sigma2, double eta, double beta, int q_max, double phi_max);
    std::string name() const override { return "cosine-spectral"; }
    double eval(const Eigen::VectorXd& z, const Eigen::VectorXd& zp) const override;
    Eigen::VectorXd grad1(const Eigen::VectorXd& z, const Eigen::VectorXd& zp) const override;
    Eigen::MatrixXd hess1(const Eigen::VectorXd& z, const Eigen::VectorXd& zp) const override;

    double scalar_eval(double t, double tp) const;
    double scalar_d1(double t, double tp) const;
    double scalar_d11(double t, double tp) const;

    int q_max() const { return q_max_; }
    double phi_max() const { return phi_max_; }
    // Spectral weight sigma^2 (eta^2 + w_q^2)^{-beta} and frequency w_q.
    double weight(int q) const { return s_[static_cast<std::size_t>(q)]; }
    double freq(int q) const { return w_[static_cast<std::size_t>(q)]; }

private:
    int q_max_;
    double phi_max_;
    std::vector<double> s_;
    std::vector<double> w_;
};

// K^I(t, t') = f(t)^T Sigma_a f(t') + base(t, t') with f(t) = (t^2/2, t^4/12)^T:
// the linear-Gaussian relaxation kernel of the lattice predictor step.
class LinearSurrogateKernel final : public Kernel {
public:
    LinearSurrogateKernel(const Eigen::Matrix2d& sigma_a,
                          std::shared_ptr<const CosineSpectralKernel> base);
    std::string name() const override { return "linear-surrogate"; }
    double eval(const Eigen::VectorXd& z, const Eigen::VectorXd& zp) const override;
    Eigen::VectorXd grad1(const Eigen::VectorXd& z, const Eigen::VectorXd& zp) const override;
    Eigen::MatrixXd hess1(const Eigen::VectorXd& z, const Eigen::VectorXd& zp) const override;

    double scalar_eval(double t, double tp) const;
    double scalar_d11(double t, double tp) const;

private:
    Eigen::Matrix2d sigma_a_;
    std::shared_ptr<const CosineSpectralKernel> base_;
};

}  // namespace frg
