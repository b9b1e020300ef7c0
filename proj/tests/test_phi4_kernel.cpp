#include <doctest.h>

#include <cmath>
#include <memory>

#include "frg/basis.hpp"
#include "frg/errors.hpp"
#include "frg/phi4_kernel.hpp"
#include "frg/rng.hpp"

using namespace frg;

namespace {

struct Setup {
    std::shared_ptr<const BasisDescriptor> basis;
    std::shared_ptr<const IntegratedPhi4Kernel> kernel;
    Ensemble ensemble;
};

Setup make_setup(int P, int n_fields, std::uint64_t seed) {
    Setup s;
    s.basis = build_basis(BasisKind::continuum_torus, P);
    s.kernel = std::make_shared<IntegratedPhi4Kernel>(s.basis, 1.0, 0);
    s.ensemble = sample_ensemble(s.basis, n_fields, seed, CovarianceSpec::correlated,
                                 DecayRule::inverse_frequency_3_2);
    return s;
}

}  // namespace

TEST_CASE("integrated kernel is symmetric and positive on the diagonal") {
    const Setup s = make_setup(2, 8, 3);
    const Eigen::MatrixXd Z = s.ensemble.feature_matrix();
    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < i; ++j) {
            const double kij = s.kernel->eval(Z.row(i).transpose(), Z.row(j).transpose());
            const double kji = s.kernel->eval(Z.row(j).transpose(), Z.row(i).transpose());
            CHECK(kij == doctest::Approx(kji).epsilon(1e-14));
        }
        CHECK(s.kernel->eval(Z.row(i).transpose(), Z.row(i).transpose()) > 0.0);
    }
}

TEST_CASE("constant-field value is invariant under the field's sign") {
    const Setup s = make_setup(2, 4, 5);
    const Eigen::MatrixXd Z = s.ensemble.feature_matrix();
    Eigen::VectorXd zc = Eigen::VectorXd::Zero(s.basis->m);
    for (double v : {0.0, 0.5, 2.0}) {
        zc[0] = v;
        const double plus = s.kernel->eval(zc, Z.row(0).transpose());
        zc[0] = -v;
        const double minus = s.kernel->eval(zc, Z.row(0).transpose());
        CHECK(plus == doctest::Approx(minus).epsilon(1e-14));
    }
}

TEST_CASE("kernel gradient matches finite differences of the value") {
    const Setup s = make_setup(1, 3, 7);
    const Eigen::MatrixXd Z = s.ensemble.feature_matrix();
    const Eigen::VectorXd z = Z.row(0).transpose();
    const Eigen::VectorXd zp = Z.row(1).transpose();
    const Eigen::VectorXd g = s.kernel->grad1(z, zp);
    const double h = 1e-5;
    for (int a = 0; a < s.basis->m; ++a) {
        Eigen::VectorXd zl = z, zr = z;
        zl[a] -= h;
        zr[a] += h;
        const double fd = (s.kernel->eval(zr, zp) - s.kernel->eval(zl, zp)) / (2.0 * h);
        CHECK(fd == doctest::Approx(g[a]).epsilon(1e-6));
    }
}

TEST_CASE("kernel Hessian matches finite differences of the gradient") {
    const Setup s = make_setup(1, 3, 9);
    const Eigen::MatrixXd Z = s.ensemble.feature_matrix();
    const Eigen::VectorXd z = Z.row(0).transpose();
    const Eigen::VectorXd zp = Z.row(2).transpose();
    const Eigen::MatrixXd H = s.kernel->hess1(z, zp);
    CHECK((H - H.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * H.cwiseAbs().maxCoeff());
    const double h = 1e-4;
    const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
    for (int a = 0; a < s.basis->m; ++a) {
        Eigen::VectorXd zl = z, zr = z;
        zl[a] -= h;
        zr[a] += h;
        const Eigen::VectorXd fd = (s.kernel->grad1(zr, zp) - s.kernel->grad1(zl, zp)) / (2.0 * h);
        for (int b = 0; b < s.basis->m; ++b) {
            CHECK(std::abs(fd[b] - H(b, a)) <= 1e-5 * scale);
        }
    }
}

TEST_CASE("constant-field prediction agrees with the explicit kernel sum") {
    const Setup s = make_setup(2, 10, 11);
    const Eigen::MatrixXd Z = s.ensemble.feature_matrix();
    CounterRng rng(12);
    Eigen::VectorXd w(10);
    for (int i = 0; i < 10; ++i) w[i] = rng.normal();
    for (double v : {0.0, 0.7, 1.9, 3.5}) {
        Eigen::VectorXd zc = Eigen::VectorXd::Zero(s.basis->m);
        zc[0] = v;
        double direct = 0.0;
        for (int i = 0; i < 10; ++i) direct += w[i] * s.kernel->eval(zc, Z.row(i).transpose());
        CHECK(predict_constant_field(*s.kernel, Z, w, v) ==
              doctest::Approx(direct).epsilon(1e-12));
    }
}

TEST_CASE("tabulated weighted Hessian tracks the direct kernel sum") {
    const Setup s = make_setup(2, 12, 13);
    const Eigen::MatrixXd Z = s.ensemble.feature_matrix();
    const Phi4HessianAccelerator accel(s.kernel, Z, 2048);
    CounterRng rng(14);
    Eigen::VectorXd w(12);
    for (int i = 0; i < 12; ++i) w[i] = rng.normal();
    const auto combined = accel.combine(w);
    for (int i = 0; i < 12; ++i) {
        const Eigen::VectorXd z = Z.row(i).transpose();
        Eigen::MatrixXd direct = Eigen::MatrixXd::Zero(s.basis->m, s.basis->m);
        for (int j = 0; j < 12; ++j) direct += w[j] * s.kernel->hess1(z, Z.row(j).transpose());
        const Eigen::MatrixXd fast = accel.weighted_hessian(combined, z);
        const double scale = std::max(1.0, direct.cwiseAbs().maxCoeff());
        CHECK((fast - direct).cwiseAbs().maxCoeff() <= 1e-6 * scale);
    }
}

TEST_CASE("construction requirements are enforced") {
    const auto lattice = build_basis(BasisKind::lattice_periodic, 8);
    CHECK_THROWS_AS(IntegratedPhi4Kernel(lattice, 1.0, 0), ValidationError);
    const auto basis = build_basis(BasisKind::continuum_torus, 2);
    CHECK_THROWS_AS(IntegratedPhi4Kernel(basis, 1.0, 3), ValidationError);  // grid too coarse
    const auto kernel = std::make_shared<IntegratedPhi4Kernel>(basis, 1.0, 0);
    CHECK_THROWS_AS(Phi4HessianAccelerator(kernel, Eigen::MatrixXd::Zero(2, basis->m), 4),
                    ValidationError);  // table too small
}
