#pragma once

#include <Eigen/Dense>
#include <memory>

#include "frg/basis.hpp"
#include "frg/kernels.hpp"

namespace frg {

// Functional covariance between continuum fields phi, phi' built by integrating
// the local-potential scalar kernel over the unit torus:
//   C(phi, phi') = int_x int_y K_U(phi(x)^2, phi'(y)^2) dx dy,
// with K_U(u, u') = 1 + u u' + (u u')^2 + exp(-(u - u')^2 / 2 sigma^2).
// Feature vectors are spectral coefficients.  The polynomial part reduces
// exactly to the per-field moments M1 = int phi^2 and M2 = int phi^4; the RBF
// part uses the uniform quadrature grid (spectrally accurate oversampling of
// the band-limited integrand is not available for the RBF, so the grid size is
// an accuracy knob, >= 8 modes by default).
class IntegratedPhi4Kernel final : public Kernel {
public:
    IntegratedPhi4Kernel(std::shared_ptr<const BasisDescriptor> basis, double sigma = 1.0,
                         int n_grid = 0);

    std::string name() const override { return "integrated-phi4"; }
    double eval(const Eigen::VectorXd& z, const Eigen::VectorXd& zp) const override;
    Eigen::VectorXd grad1(const Eigen::VectorXd& z, const Eigen::VectorXd& zp) const override;
    Eigen::MatrixXd hess1(const Eigen::VectorXd& z, const Eigen::VectorXd& zp) const override;

    const BasisDescriptor& basis() const { return *basis_; }
    std::shared_ptr<const BasisDescriptor> basis_ptr() const { return basis_; }
    int n_grid() const { return n_grid_; }
    const AdditiveLpaKernel& scalar() const { return scalar_; }
    // n_grid x m matrix of basis values on the quadrature grid.
    const Eigen::MatrixXd& basis_values() const { return E_; }

    // u(x_j) = phi(x_j)^2 on the quadrature grid.
    Eigen::VectorXd grid_u(const Eigen::VectorXd& z) const;
    // (M1, M2) = (mean of u, mean of u^2) over the grid.
    std::pair<double, double> moments(const Eigen::VectorXd& u) const;

private:
    std::shared_ptr<const BasisDescriptor> basis_;
    AdditiveLpaKernel scalar_;
    int n_grid_;
    Eigen::MatrixXd E_;

    // Position density of the second variation, rho(x), such that
    // hess1 = (1/n_g) E^T diag(rho) E.
    Eigen::VectorXd density(const Eigen::VectorXd& u, const Eigen::VectorXd& up) const;
};

// Posterior-mean contribution of the kernel at the constant field phi(x) = v:
// sum_i w_i C(const v, z_i), using the exact constant-field moments
// M1 = v^2, M2 = v^4 (the caller adds the prior mean).
double predict_constant_field(const IntegratedPhi4Kernel& kernel, const Eigen::MatrixXd& Z,
                              const Eigen::VectorXd& w, double v);

// Precomputed per-collocation-field scalar integrals that turn the weighted
// surrogate Hessian sum_i w_i hess1(z, z_i) into a table lookup: each field i
// contributes its moments plus tabulated functions
//   A1_i(u) = (1/n_g) sum_y d1 rbf(u, u_i(y)),
//   A2_i(u) = (1/n_g) sum_y d11 rbf(u, u_i(y))
// on a shared u grid, combined per weight vector with one matrix-vector
// product and evaluated by linear interpolation.
class Phi4HessianAccelerator {
public:
    Phi4HessianAccelerator(std::shared_ptr<const IntegratedPhi4Kernel> kernel,
                           const Eigen::MatrixXd& Z, int table_size = 2048);

    struct Combined {
        Eigen::VectorXd rho1, rho2;  // sum_i w_i A1_i / A2_i on the u table
        double s1 = 0.0, s2 = 0.0;   // sum_i w_i M1_i, sum_i w_i M2_i
    };

    Combined combine(const Eigen::VectorXd& w) const;
    // sum_i w_i hess1(z, z_i) for the weights baked into `c`.
    Eigen::MatrixXd weighted_hessian(const Combined& c, const Eigen::VectorXd& z) const;

private:
    std::shared_ptr<const IntegratedPhi4Kernel> kernel_;
    Eigen::VectorXd u_table_;   // table_size nodes on [0, u_max]
    Eigen::MatrixXd A1_, A2_;   // table_size x N
    Eigen::VectorXd m1_, m2_;   // per-field moments
    double du_ = 0.0;

    double interp(const Eigen::VectorXd& tab, double u) const;
};

}  // namespace frg
