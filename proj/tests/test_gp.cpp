#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <numeric>
#include <vector>

#include "frg/errors.hpp"
#include "frg/gp.hpp"
#include "frg/kernels.hpp"
#include "frg/rng.hpp"

using namespace frg;

namespace {

Eigen::MatrixXd random_points(std::uint64_t seed, int n, int dim, double scale = 1.5) {
    CounterRng rng(seed);
    Eigen::MatrixXd Z(n, dim);
    for (int i = 0; i < n; ++i) {
        for (int a = 0; a < dim; ++a) Z(i, a) = scale * rng.normal();
    }
    return Z;
}

}  // namespace

TEST_CASE("single-point fit has the closed-form weight and prediction") {
    auto kernel = std::make_shared<QuadraticFeatureKernel>();
    Eigen::MatrixXd Z(1, 1);
    Z(0, 0) = 1.0;  // k(z, z) = (1 + 1)^2 = 4
    Eigen::VectorXd Y(1);
    Y[0] = 5.0;
    const double eps = 1e-10;
    const GpSurrogate s = fit(kernel, Z, Y, PriorMean{}, eps, ExecPolicy::serial_reference);
    CHECK(s.w[0] == doctest::Approx(5.0 / (4.0 + eps)));
    CHECK(s.predict(Z.row(0).transpose()) == doctest::Approx(5.0 * 4.0 / (4.0 + eps)));
}

TEST_CASE("Gram assembly succeeds on 20 random points and estimates conditioning") {
    auto kernel = std::make_shared<AdditiveLpaKernel>(1.0);
    const Eigen::MatrixXd Z = random_points(21, 20, 3);
    const auto factor = assemble_gram(*kernel, Z, 1e-10, ExecPolicy::serial_reference);
    CHECK(factor->cond_estimate >= 1.0);
}

TEST_CASE("serial and parallel Gram assembly agree bit for bit") {
    auto kernel = std::make_shared<AdditiveLpaKernel>(0.8);
    const Eigen::MatrixXd Z = random_points(4, 30, 4);
    const Eigen::VectorXd Y = random_points(5, 30, 1).col(0);
    const GpSurrogate a = fit(kernel, Z, Y, PriorMean{}, 1e-10, ExecPolicy::serial_reference);
    const GpSurrogate b = fit(kernel, Z, Y, PriorMean{}, 1e-10, ExecPolicy::parallel);
    CHECK((a.w - b.w).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fitted surrogate interpolates the data to conditioning accuracy") {
    auto kernel = std::make_shared<AdditiveLpaKernel>(1.2);
    const Eigen::MatrixXd Z = random_points(33, 25, 2);
    const Eigen::VectorXd Y = random_points(34, 25, 1).col(0) * 3.0;
    const double eps = 1e-10;
    const GpSurrogate s = fit(kernel, Z, Y, PriorMean{}, eps, ExecPolicy::serial_reference);
    const double bound = 10.0 * eps * s.gram->cond_estimate * Y.cwiseAbs().maxCoeff();
    for (int i = 0; i < Z.rows(); ++i) {
        CHECK(std::abs(s.predict(Z.row(i).transpose()) - Y[i]) <= std::max(bound, 1e-12));
    }
}

TEST_CASE("predictions are invariant under permuting the collocation rows") {
    // The quadratic kernel on 3 features has rank 7; using exactly 7 rows
    // keeps the Gram matrix well conditioned, so the only permutation effect
    // is LDLT pivoting roundoff.
    auto kernel = std::make_shared<QuadraticFeatureKernel>();
    const int n = 7;
    const Eigen::MatrixXd Z = random_points(60, n, 3);
    const Eigen::VectorXd Y = random_points(61, n, 1).col(0);

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::swap(perm[0], perm[6]);
    std::swap(perm[2], perm[4]);
    std::swap(perm[1], perm[5]);
    Eigen::MatrixXd Zp(n, Z.cols());
    Eigen::VectorXd Yp(n);
    for (int i = 0; i < n; ++i) {
        Zp.row(i) = Z.row(perm[static_cast<std::size_t>(i)]);
        Yp[i] = Y[perm[static_cast<std::size_t>(i)]];
    }
    const GpSurrogate a = fit(kernel, Z, Y, PriorMean{}, 1e-10, ExecPolicy::serial_reference);
    const GpSurrogate b = fit(kernel, Zp, Yp, PriorMean{}, 1e-10, ExecPolicy::serial_reference);
    // Roundoff under a permuted factorization is bounded by the conditioning.
    const double tol = std::max(1e-12, 1e3 * 2.3e-16 * a.gram->cond_estimate);
    const Eigen::MatrixXd Q = random_points(62, 8, 3);
    for (int i = 0; i < Q.rows(); ++i) {
        const Eigen::VectorXd q = Q.row(i).transpose();
        CHECK(std::abs(a.predict(q) - b.predict(q)) <= tol * std::max(1.0, std::abs(a.predict(q))));
    }
}

TEST_CASE("data equal to the prior mean yields vanishing weights") {
    auto kernel = std::make_shared<QuadraticFeatureKernel>();
    const Eigen::MatrixXd Z = random_points(70, 12, 3);
    Eigen::VectorXd lam(3);
    lam << 0.0, 2.0, 4.0;
    const PriorMean mean = PriorMean::kinetic(1.0, 0.5, lam);
    const Eigen::VectorXd Y = mean.values(Z);
    const GpSurrogate s = fit(kernel, Z, Y, mean, 1e-10, ExecPolicy::serial_reference);
    CHECK(s.w.cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, Y.cwiseAbs().maxCoeff()));
}

TEST_CASE("duplicated collocation rows are handled by the nugget") {
    auto kernel = std::make_shared<AdditiveLpaKernel>(1.0);
    Eigen::MatrixXd Z = random_points(80, 10, 2);
    Z.row(9) = Z.row(4);  // exact duplicate
    Eigen::VectorXd Y = random_points(81, 10, 1).col(0);
    Y[9] = Y[4];
    const GpSurrogate s = fit(kernel, Z, Y, PriorMean{}, 1e-8, ExecPolicy::serial_reference);
    CHECK(std::isfinite(s.w.cwiseAbs().maxCoeff()));
    CHECK(std::abs(s.predict(Z.row(4).transpose()) - Y[4]) <= 1e-4 * std::max(1.0, std::abs(Y[4])));
}

TEST_CASE("local curvature of a quadratic potential fit is recovered") {
    auto kernel = std::make_shared<AdditiveLpaKernel>(1.0);
    const int n = 40;
    Eigen::MatrixXd Z(n, 1);
    Eigen::VectorXd Y(n);
    for (int i = 0; i < n; ++i) {
        const double phi = -2.0 + 4.0 * i / (n - 1);
        Z(i, 0) = phi;
        Y[i] = phi * phi;  // curvature 2 everywhere
    }
    const GpSurrogate s = fit(kernel, Z, Y, PriorMean{}, 1e-10, ExecPolicy::serial_reference);
    CHECK(local_curvature(s, 0.5) == doctest::Approx(2.0).epsilon(1e-2));
    CHECK(local_curvature(s, -1.0) == doctest::Approx(2.0).epsilon(1e-2));
}

TEST_CASE("zero data with zero mean predicts zero") {
    auto kernel = std::make_shared<QuadraticFeatureKernel>();
    const Eigen::MatrixXd Z = random_points(90, 8, 2);
    const Eigen::VectorXd Y = Eigen::VectorXd::Zero(8);
    const GpSurrogate s = fit(kernel, Z, Y, PriorMean{}, 1e-10, ExecPolicy::serial_reference);
    const Eigen::MatrixXd Q = random_points(91, 5, 2);
    for (int i = 0; i < Q.rows(); ++i) {
        CHECK(std::abs(s.predict(Q.row(i).transpose())) <= 1e-12);
    }
}

TEST_CASE("the fit is affine in the data vector") {
    auto kernel = std::make_shared<AdditiveLpaKernel>(1.1);
    const Eigen::MatrixXd Z = random_points(100, 6, 2);
    const Eigen::VectorXd Y1 = random_points(101, 6, 1).col(0);
    const Eigen::VectorXd Y2 = random_points(102, 6, 1).col(0);
    const double a = 0.7, b = -1.3;
    const GpSurrogate s1 = fit(kernel, Z, Y1, PriorMean{}, 1e-8, ExecPolicy::serial_reference);
    const GpSurrogate s2 = fit(kernel, Z, Y2, PriorMean{}, 1e-8, ExecPolicy::serial_reference);
    const GpSurrogate s12 =
        fit(kernel, Z, a * Y1 + b * Y2, PriorMean{}, 1e-8, ExecPolicy::serial_reference);
    const double tol = std::max(1e-11, 1e3 * 2.3e-16 * s1.gram->cond_estimate);
    const Eigen::MatrixXd Q = random_points(103, 6, 2);
    for (int i = 0; i < Q.rows(); ++i) {
        const Eigen::VectorXd q = Q.row(i).transpose();
        const double combined = a * s1.predict(q) + b * s2.predict(q);
        CHECK(std::abs(s12.predict(q) - combined) <= tol * std::max(1.0, std::abs(combined)));
    }
}

TEST_CASE("surrogate derivatives match finite differences of the prediction") {
    auto kernel = std::make_shared<AdditiveLpaKernel>(1.0);
    const Eigen::MatrixXd Z = random_points(110, 12, 3);
    const Eigen::VectorXd Y = random_points(111, 12, 1).col(0);
    Eigen::VectorXd lam(3);
    lam << 0.0, 1.0, 3.0;
    const PriorMean mean = PriorMean::kinetic(0.5, 1.0, lam);
    const GpSurrogate s = fit(kernel, Z, Y, mean, 1e-10, ExecPolicy::serial_reference);

    CounterRng rng(112);
    for (int trial = 0; trial < 5; ++trial) {
        Eigen::VectorXd z(3);
        for (int a = 0; a < 3; ++a) z[a] = rng.normal();
        const Eigen::VectorXd g = s.grad(z);
        const Eigen::MatrixXd H = s.hessian(z);
        CHECK((H - H.transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK((s.hessian_diag(z) - H.diagonal()).cwiseAbs().maxCoeff() <= 1e-12);
        for (int a = 0; a < 3; ++a) {
            Eigen::VectorXd zl = z, zr = z;
            zl[a] -= 1e-4;
            zr[a] += 1e-4;
            const double fd = (s.predict(zr) - s.predict(zl)) / 2e-4;
            CHECK(std::abs(fd - g[a]) <= 1e-5 * std::max(1.0, std::abs(g[a])));
            const Eigen::VectorXd fdh = (s.grad(zr) - s.grad(zl)) / 2e-4;
            for (int b = 0; b < 3; ++b) {
                CHECK(std::abs(fdh[b] - H(b, a)) <= 1e-4 * std::max(1.0, std::abs(H(b, a))));
            }
        }
    }
}

TEST_CASE("invalid inputs are rejected") {
    auto kernel = std::make_shared<QuadraticFeatureKernel>();
    const Eigen::MatrixXd Z = random_points(120, 4, 2);
    const Eigen::VectorXd Y = Eigen::VectorXd::Ones(3);  // wrong length
    CHECK_THROWS_AS(fit(kernel, Z, Y, PriorMean{}, 1e-10, ExecPolicy::serial_reference),
                    ValidationError);
    CHECK_THROWS_AS(assemble_gram(*kernel, Z, 0.0, ExecPolicy::serial_reference), ValidationError);
}
