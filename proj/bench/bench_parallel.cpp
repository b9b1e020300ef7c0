// Timing comparison of the serial reference kernels against the parallel
// (and algebraically restructured) execution paths.  Not a correctness test;
// equivalence of the two paths is covered by the unit tests.

#include <chrono>
#include <cstdio>
#include <memory>

#include "frg/basis.hpp"
#include "frg/flow.hpp"
#include "frg/gp.hpp"
#include "frg/kernels.hpp"
#include "frg/models.hpp"

namespace {

template <typename F>
double time_best_of(int reps, F&& f) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
    }
    return best;
}

void bench_gram(int n) {
    const auto basis = frg::build_basis(frg::BasisKind::continuum_torus, 20);
    const frg::QuadraticFeatureKernel kernel;
    const frg::Ensemble ens = frg::sample_ensemble(basis, n, 1, frg::CovarianceSpec::correlated,
                                                   frg::DecayRule::inverse_frequency);
    const Eigen::MatrixXd Z = ens.feature_matrix();
    const double ts = time_best_of(3, [&] {
        frg::assemble_gram(kernel, Z, 1e-12, frg::ExecPolicy::serial_reference);
    });
    const double tp = time_best_of(3, [&] {
        frg::assemble_gram(kernel, Z, 1e-12, frg::ExecPolicy::parallel);
    });
    std::printf("gram assembly      N=%4d   serial %8.3f ms   parallel %8.3f ms   speedup %.2fx\n",
                n, 1e3 * ts, 1e3 * tp, ts / tp);
}

void bench_flow_rhs(int n) {
    frg::FlowProblem p;
    p.basis = frg::build_basis(frg::BasisKind::continuum_torus, 20);
    p.kernel = std::make_shared<frg::QuadraticFeatureKernel>();
    p.collocation = frg::sample_ensemble(p.basis, n, 1, frg::CovarianceSpec::correlated,
                                         frg::DecayRule::inverse_frequency);
    p.variant = frg::FlowVariant::wilson_polchinski;
    const frg::GaussianWpModel model{p.basis, p.regulator};
    Eigen::VectorXd Y(n);
    for (int i = 0; i < n; ++i) Y[i] = frg::wp_exact(model, p.collocation.field(i), 5.0);

    p.policy = frg::ExecPolicy::serial_reference;
    const double ts = time_best_of(3, [&] { frg::wp_rhs(p, 5.0, Y); });
    p.policy = frg::ExecPolicy::parallel;
    const double tp = time_best_of(3, [&] { frg::wp_rhs(p, 5.0, Y); });
    std::printf("flow rhs (P=20)    N=%4d   serial %8.3f ms   parallel %8.3f ms   speedup %.2fx\n",
                n, 1e3 * ts, 1e3 * tp, ts / tp);
}

}  // namespace

int main() {
    for (int n : {100, 200, 400}) bench_gram(n);
    for (int n : {100, 200, 400}) bench_flow_rhs(n);
    return 0;
}
