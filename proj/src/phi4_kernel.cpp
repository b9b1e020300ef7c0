#include "frg/phi4_kernel.hpp"

#include <cmath>

#include "frg/errors.hpp"

namespace frg {

IntegratedPhi4Kernel::IntegratedPhi4Kernel(std::shared_ptr<const BasisDescriptor> basis,
                                           double sigma, int n_grid)
    : basis_(std::move(basis)), scalar_(sigma), n_grid_(n_grid) {
    if (!basis_ || basis_->kind != BasisKind::continuum_torus) {
        throw ValidationError("integrated-phi4 kernel requires a continuum torus basis");
    }
    if (n_grid_ == 0) n_grid_ = 8 * basis_->m;
    if (n_grid_ < 8 * basis_->m) {
        throw ValidationError("integrated-phi4 quadrature grid must have >= 8m points");
    }
    E_.resize(n_grid_, basis_->m);
    for (int j = 0; j < n_grid_; ++j) {
        E_.row(j) = basis_->row(static_cast<double>(j) / n_grid_).transpose();
    }
}

Eigen::VectorXd IntegratedPhi4Kernel::grid_u(const Eigen::VectorXd& z) const {
    if (z.size() != basis_->m) throw ValidationError("feature vector size mismatch");
    return (E_ * z).array().square();
}

std::pair<double, double> IntegratedPhi4Kernel::moments(const Eigen::VectorXd& u) const {
    return {u.mean(), u.array().square().mean()};
}

double IntegratedPhi4Kernel::eval(const Eigen::VectorXd& z, const Eigen::VectorXd& zp) const {
    const Eigen::VectorXd u = grid_u(z);
    const Eigen::VectorXd up = grid_u(zp);
    const auto [m1, m2] = moments(u);
    const auto [m1p, m2p] = moments(up);
    double rbf = 0.0;
    for (int i = 0; i < n_grid_; ++i) {
        for (int j = 0; j < n_grid_; ++j) rbf += scalar_.rbf(u[i], up[j]);
    }
    return 1.0 + m1 * m1p + m2 * m2p + rbf / (static_cast<double>(n_grid_) * n_grid_);
}

Eigen::VectorXd IntegratedPhi4Kernel::grad1(const Eigen::VectorXd& z,
                                            const Eigen::VectorXd& zp) const {
    const Eigen::VectorXd phi = E_ * z;
    const Eigen::VectorXd u = phi.array().square();
    const Eigen::VectorXd up = grid_u(zp);
    const auto [m1p, m2p] = moments(up);
    // s(x) = int d1 K_U(u(x), u'(y)) dy; dC/dz = (2/n_g) E^T (s .* phi).
    Eigen::VectorXd s(n_grid_);
    for (int i = 0; i < n_grid_; ++i) {
        double rbf1 = 0.0;
        for (int j = 0; j < n_grid_; ++j) rbf1 += scalar_.rbf_d1(u[i], up[j]);
        s[i] = m1p + 2.0 * u[i] * m2p + rbf1 / n_grid_;
    }
    return (2.0 / n_grid_) * (E_.transpose() * s.cwiseProduct(phi));
}

Eigen::VectorXd IntegratedPhi4Kernel::density(const Eigen::VectorXd& u,
                                              const Eigen::VectorXd& up) const {
    const auto [m1p, m2p] = moments(up);
    Eigen::VectorXd rho(n_grid_);
    for (int i = 0; i < n_grid_; ++i) {
        double rbf1 = 0.0, rbf2 = 0.0;
        for (int j = 0; j < n_grid_; ++j) {
            rbf1 += scalar_.rbf_d1(u[i], up[j]);
            rbf2 += scalar_.rbf_d11(u[i], up[j]);
        }
        const double t1 = m1p + 2.0 * u[i] * m2p + rbf1 / n_grid_;
        const double t2 = 2.0 * m2p + rbf2 / n_grid_;
        rho[i] = 2.0 * t1 + 4.0 * u[i] * t2;
    }
    return rho;
}

Eigen::MatrixXd IntegratedPhi4Kernel::hess1(const Eigen::VectorXd& z,
                                            const Eigen::VectorXd& zp) const {
    // The second variation is diagonal in position, so the spectral Hessian is
    // a weighted Gram of basis rows: H = (1/n_g) E^T diag(rho) E.
    const Eigen::VectorXd rho = density(grid_u(z), grid_u(zp));
    return (E_.transpose() * rho.asDiagonal() * E_) / n_grid_;
}

double predict_constant_field(const IntegratedPhi4Kernel& kernel, const Eigen::MatrixXd& Z,
                              const Eigen::VectorXd& w, double v) {
    const int ng = kernel.n_grid();
    const double u = v * v;
    double out = 0.0;
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        const Eigen::VectorXd ui = kernel.grid_u(Z.row(i).transpose());
        const auto [m1, m2] = kernel.moments(ui);
        double rbf = 0.0;
        for (int j = 0; j < ng; ++j) rbf += kernel.scalar().rbf(u, ui[j]);
        out += w[i] * (1.0 + u * m1 + u * u * m2 + rbf / ng);
    }
    return out;
}

Phi4HessianAccelerator::Phi4HessianAccelerator(std::shared_ptr<const IntegratedPhi4Kernel> kernel,
                                               const Eigen::MatrixXd& Z, int table_size)
    : kernel_(std::move(kernel)) {
    if (table_size < 16) throw ValidationError("accelerator table too small");
    const int n = static_cast<int>(Z.rows());
    const int ng = kernel_->n_grid();
    const AdditiveLpaKernel& sc = kernel_->scalar();

    std::vector<Eigen::VectorXd> field_u(static_cast<std::size_t>(n));
    double umax = 0.0;
    m1_.resize(n);
    m2_.resize(n);
    for (int i = 0; i < n; ++i) {
        field_u[static_cast<std::size_t>(i)] = kernel_->grid_u(Z.row(i).transpose());
        umax = std::max(umax, field_u[static_cast<std::size_t>(i)].maxCoeff());
        const auto [m1, m2] = kernel_->moments(field_u[static_cast<std::size_t>(i)]);
        m1_[i] = m1;
        m2_[i] = m2;
    }
    umax = umax * 1.05 + 1e-12;
    u_table_.resize(table_size);
    du_ = umax / (table_size - 1);
    for (int t = 0; t < table_size; ++t) u_table_[t] = t * du_;

    A1_.resize(table_size, n);
    A2_.resize(table_size, n);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd& ui = field_u[static_cast<std::size_t>(i)];
        for (int t = 0; t < table_size; ++t) {
            double a1 = 0.0, a2 = 0.0;
            for (int j = 0; j < ng; ++j) {
                a1 += sc.rbf_d1(u_table_[t], ui[j]);
                a2 += sc.rbf_d11(u_table_[t], ui[j]);
            }
            A1_(t, i) = a1 / ng;
            A2_(t, i) = a2 / ng;
        }
    }
}

Phi4HessianAccelerator::Combined Phi4HessianAccelerator::combine(const Eigen::VectorXd& w) const {
    Combined c;
    c.rho1 = A1_ * w;
    c.rho2 = A2_ * w;
    c.s1 = m1_.dot(w);
    c.s2 = m2_.dot(w);
    return c;
}

double Phi4HessianAccelerator::interp(const Eigen::VectorXd& tab, double u) const {
    // Catmull-Rom cubic: a smooth right-hand side keeps the adaptive
    // integrator's step size large; linear interpolation puts a derivative
    // kink at every node and forces tiny steps.
    const int last = static_cast<int>(tab.size()) - 1;
    const double pos = std::clamp(u / du_, 0.0, static_cast<double>(last));
    const int t = std::min(static_cast<int>(pos), last - 1);
    const double x = pos - t;
    const double p1 = tab[t], p2 = tab[t + 1];
    const double p0 = t > 0 ? tab[t - 1] : 2.0 * p1 - p2;
    const double p3 = t + 2 <= last ? tab[t + 2] : 2.0 * p2 - p1;
    const double a = -0.5 * p0 + 1.5 * p1 - 1.5 * p2 + 0.5 * p3;
    const double b = p0 - 2.5 * p1 + 2.0 * p2 - 0.5 * p3;
    const double c = 0.5 * (p2 - p0);
    return ((a * x + b) * x + c) * x + p1;
}

Eigen::MatrixXd Phi4HessianAccelerator::weighted_hessian(const Combined& c,
                                                         const Eigen::VectorXd& z) const {
    const int ng = kernel_->n_grid();
    const Eigen::VectorXd u = kernel_->grid_u(z);
    Eigen::VectorXd rho(ng);
    for (int i = 0; i < ng; ++i) {
        rho[i] = 2.0 * c.s1 + 12.0 * u[i] * c.s2 + 2.0 * interp(c.rho1, u[i]) +
                 4.0 * u[i] * interp(c.rho2, u[i]);
    }
    const Eigen::MatrixXd& E = kernel_->basis_values();
    return (E.transpose() * rho.asDiagonal() * E) / ng;
}

}  // namespace frg
