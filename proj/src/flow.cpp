#include "frg/flow.hpp"

#include <cmath>

#include "frg/errors.hpp"
#include "frg/phi4_kernel.hpp"

namespace frg {

namespace {

struct FlowContext {
    const FlowProblem& prob;
    int N = 0;
    int m = 0;
    Eigen::MatrixXd Z;
    Eigen::MatrixXd Zsq;  // Z .* Z, for the quadratic-feature fast path
    Eigen::VectorXd mu;   // prior mean at the collocation features
    std::shared_ptr<const GramFactor> gram;
    const QuadraticFeatureKernel* quad = nullptr;
    std::shared_ptr<const IntegratedPhi4Kernel> phi4;
    std::unique_ptr<Phi4HessianAccelerator> accel;

    explicit FlowContext(const FlowProblem& p) : prob(p) {
        if (!p.basis || !p.kernel) {
            throw ValidationError("flow problem requires a basis and a kernel");
        }
        if (p.collocation.basis.get() != p.basis.get()) {
            throw ValidationError("collocation ensemble basis does not match the flow basis");
        }
        if (!(p.kappa_uv > p.kappa_ir) || !(p.kappa_ir > 0.0)) {
            throw ValidationError("flow requires kappa_uv > kappa_ir > 0");
        }
        if (p.collocation.size() < 1) throw ValidationError("empty collocation ensemble");
        N = p.collocation.size();
        m = p.basis->m;
        Z = p.collocation.feature_matrix();
        mu = p.mean.values(Z);
        gram = assemble_gram(*p.kernel, Z, p.nugget, p.policy, p.gram_solver);

        if (p.policy == ExecPolicy::parallel) {
            quad = dynamic_cast<const QuadraticFeatureKernel*>(p.kernel.get());
            if (quad) Zsq = Z.cwiseProduct(Z);
            phi4 = std::dynamic_pointer_cast<const IntegratedPhi4Kernel>(p.kernel);
            if (phi4 && prob.variant == FlowVariant::wetterich) {
                accel = std::make_unique<Phi4HessianAccelerator>(phi4, Z);
            } else {
                phi4.reset();
            }
        }
    }

    void regulator_at(double kappa, Eigen::VectorXd& r, Eigen::VectorXd& dr) const {
        r.resize(m);
        dr.resize(m);
        for (int a = 0; a < m; ++a) {
            r[a] = reg_r(prob.regulator, prob.basis->lambda[a], kappa);
            dr[a] = reg_dr_dkappa(prob.regulator, prob.basis->lambda[a], kappa);
        }
    }

    void rhs(double kappa, const Eigen::VectorXd& Y, Eigen::VectorXd& out) const {
        const Eigen::VectorXd w = gram->solve(Y - mu);
        Eigen::VectorXd r, dr;
        regulator_at(kappa, r, dr);
        out.resize(N);

        if (quad && prob.mean.type != PriorMean::Type::bare_potential) {
            rhs_quadratic(w, r, dr, out);
        } else if (accel) {
            rhs_phi4(w, r, dr, out);
        } else {
            rhs_generic(w, r, dr, out);
        }
    }

private:
    // Quadratic-feature kernel: the surrogate Hessian diagonal 2 v with
    // v = (Z.*Z)^T w is field independent and the gradient is 2 z.*v + 2 u
    // with u = Z^T w, so both variants cost O(N m) per evaluation.
    void rhs_quadratic(const Eigen::VectorXd& w, const Eigen::VectorXd& r,
                       const Eigen::VectorXd& dr, Eigen::VectorXd& out) const {
        const Eigen::VectorXd v = Zsq.transpose() * w;
        const Eigen::VectorXd hd =
            prob.mean.hess_diag(Eigen::VectorXd::Zero(m)) + 2.0 * v + r;
        if (prob.variant == FlowVariant::wetterich) {
            double val = 0.0;
            for (int a = 0; a < m; ++a) {
                if (dr[a] != 0.0) val += 0.5 * dr[a] / hd[a];
            }
            out.setConstant(val);
            return;
        }
        const Eigen::VectorXd u = Z.transpose() * w;
#pragma omp parallel for schedule(static)
        for (int i = 0; i < N; ++i) {
            const Eigen::VectorXd z = Z.row(i).transpose();
            const Eigen::VectorXd D = 2.0 * z.cwiseProduct(v) + 2.0 * u + prob.mean.grad(z);
            double val = 0.0;
            for (int a = 0; a < m; ++a) {
                if (dr[a] != 0.0) val += 0.5 * dr[a] * (hd[a] - r[a] + D[a] * D[a]);
            }
            out[i] = val;
        }
    }

    void rhs_phi4(const Eigen::VectorXd& w, const Eigen::VectorXd& r, const Eigen::VectorXd& dr,
                  Eigen::VectorXd& out) const {
        const Phi4HessianAccelerator::Combined c = accel->combine(w);
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < N; ++i) {
            const Eigen::VectorXd z = Z.row(i).transpose();
            Eigen::MatrixXd A = accel->weighted_hessian(c, z);
            A.diagonal() += prob.mean.hess_diag(z) + r;
            const Eigen::MatrixXd Ainv = A.partialPivLu().inverse();
            double val = 0.0;
            for (int a = 0; a < m; ++a) {
                if (dr[a] != 0.0) val += 0.5 * dr[a] * Ainv(a, a);
            }
            out[i] = val;
        }
    }

    // Straightforward per-pair kernel sums; reference implementation for every
    // kernel and the only path under ExecPolicy::serial_reference.
    void rhs_generic(const Eigen::VectorXd& w, const Eigen::VectorXd& r,
                     const Eigen::VectorXd& dr, Eigen::VectorXd& out) const {
        const bool run_parallel = prob.policy == ExecPolicy::parallel;
        const bool additive = prob.kernel->additive();
#pragma omp parallel for schedule(dynamic) if (run_parallel)
        for (int i = 0; i < N; ++i) {
            const Eigen::VectorXd z = Z.row(i).transpose();
            if (prob.variant == FlowVariant::wilson_polchinski) {
                Eigen::VectorXd D = prob.mean.grad(z);
                Eigen::VectorXd hd = prob.mean.hess_diag(z);
                for (int j = 0; j < N; ++j) {
                    const Eigen::VectorXd zj = Z.row(j).transpose();
                    D += w[j] * prob.kernel->grad1(z, zj);
                    hd += w[j] * prob.kernel->hess1_diag(z, zj);
                }
                double val = 0.0;
                for (int a = 0; a < m; ++a) {
                    if (dr[a] != 0.0) val += 0.5 * dr[a] * (hd[a] + D[a] * D[a]);
                }
                out[i] = val;
            } else if (additive) {
                Eigen::VectorXd hd = prob.mean.hess_diag(z) + r;
                for (int j = 0; j < N; ++j) {
                    hd += w[j] * prob.kernel->hess1_diag(z, Z.row(j).transpose());
                }
                double val = 0.0;
                for (int a = 0; a < m; ++a) {
                    if (dr[a] != 0.0) val += 0.5 * dr[a] / hd[a];
                }
                out[i] = val;
            } else {
                Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
                for (int j = 0; j < N; ++j) {
                    A += w[j] * prob.kernel->hess1(z, Z.row(j).transpose());
                }
                A.diagonal() += prob.mean.hess_diag(z) + r;
                const Eigen::MatrixXd Ainv = A.partialPivLu().inverse();
                double val = 0.0;
                for (int a = 0; a < m; ++a) {
                    if (dr[a] != 0.0) val += 0.5 * dr[a] * Ainv(a, a);
                }
                out[i] = val;
            }
        }
    }
};

std::vector<double> sample_scales(const FlowProblem& p) {
    if (p.n_t < 1) throw ValidationError("flow requires n_t >= 1 output intervals");
    std::vector<double> kappas(static_cast<std::size_t>(p.n_t) + 1);
    for (int k = 0; k <= p.n_t; ++k) {
        kappas[static_cast<std::size_t>(k)] =
            p.kappa_uv + (p.kappa_ir - p.kappa_uv) * k / p.n_t;
    }
    kappas.front() = p.kappa_uv;
    kappas.back() = p.kappa_ir;
    return kappas;
}

std::vector<double> regulator_breakpoints(const FlowProblem& p, bool in_log) {
    std::vector<double> cuts;
    if (p.regulator.type != RegulatorProfile::Type::litim) return cuts;
    for (const auto& [lambda, mult] : p.basis->multiplicities()) {
        (void)mult;
        if (lambda <= 0.0) continue;
        const double kink = std::sqrt(lambda);
        if (kink > p.kappa_ir && kink < p.kappa_uv) {
            cuts.push_back(in_log ? std::log(kink) : kink);
        }
    }
    return cuts;
}

}  // namespace

GpSurrogate FlowTrajectory::surrogate_at(int step) const {
    if (step < 0 || step >= Y.rows()) throw ValidationError("trajectory step out of range");
    return fit_with_factor(kernel, Z, Y.row(step).transpose(), mean, nugget, gram);
}

FlowTrajectory integrate_flow(const FlowProblem& problem) {
    if (!problem.initial) throw ValidationError("flow integration requires an initial condition");
    FlowContext ctx(problem);

    Eigen::VectorXd Y0(ctx.N);
    for (int i = 0; i < ctx.N; ++i) Y0[i] = problem.initial(problem.collocation.field(i));

    const std::vector<double> kappas = sample_scales(problem);
    OdeOptions opts;
    opts.rtol = problem.rtol;
    opts.atol = problem.atol;

    OdeResult ode;
    if (problem.log_kappa) {
        std::vector<double> sample_s(kappas.size());
        for (std::size_t k = 0; k < kappas.size(); ++k) sample_s[k] = std::log(kappas[k]);
        const OdeRhs rhs = [&ctx](double s, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
            const double kappa = std::exp(s);
            ctx.rhs(kappa, y, dy);
            dy *= kappa;
        };
        ode = integrate_ode(rhs, std::log(problem.kappa_uv), std::log(problem.kappa_ir), Y0,
                            sample_s, opts, regulator_breakpoints(problem, true));
    } else {
        const OdeRhs rhs = [&ctx](double kappa, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
            ctx.rhs(kappa, y, dy);
        };
        ode = integrate_ode(rhs, problem.kappa_uv, problem.kappa_ir, Y0, kappas, opts,
                            regulator_breakpoints(problem, false));
    }

    FlowTrajectory traj;
    traj.kappas = kappas;
    traj.Y = std::move(ode.samples);
    traj.stats = ode.stats;
    traj.kernel = problem.kernel;
    traj.Z = ctx.Z;
    traj.mean = problem.mean;
    traj.nugget = problem.nugget;
    traj.gram = ctx.gram;
    return traj;
}

namespace {
Eigen::VectorXd one_shot_rhs(FlowProblem problem, FlowVariant variant, double kappa,
                             const Eigen::VectorXd& Y) {
    problem.variant = variant;
    FlowContext ctx(problem);
    if (Y.size() != ctx.N) throw ValidationError("flow rhs: value vector size mismatch");
    Eigen::VectorXd out;
    ctx.rhs(kappa, Y, out);
    return out;
}
}  // namespace

Eigen::VectorXd wetterich_rhs(const FlowProblem& problem, double kappa, const Eigen::VectorXd& Y) {
    return one_shot_rhs(problem, FlowVariant::wetterich, kappa, Y);
}

Eigen::VectorXd wp_rhs(const FlowProblem& problem, double kappa, const Eigen::VectorXd& Y) {
    return one_shot_rhs(problem, FlowVariant::wilson_polchinski, kappa, Y);
}

Eigen::VectorXd collocation_errors(const FlowTrajectory& traj, const Ensemble& collocation,
                                   const std::function<double(const Field&, double)>& exact) {
    const int n_t = static_cast<int>(traj.kappas.size());
    const int n = collocation.size();
    if (traj.Y.cols() != n) throw ValidationError("collocation ensemble size mismatch");
    Eigen::VectorXd err(n_t);
    for (int t = 0; t < n_t; ++t) {
        Eigen::VectorXd ex(n);
        for (int i = 0; i < n; ++i) ex[i] = exact(collocation.field(i), traj.kappas[t]);
        const double denom = ex.norm();
        err[t] = denom > 0.0 ? (traj.Y.row(t).transpose() - ex).norm() / denom
                             : std::numeric_limits<double>::quiet_NaN();
    }
    return err;
}

Eigen::VectorXd test_errors(const FlowTrajectory& traj, const Ensemble& test,
                            const std::function<double(const Field&, double)>& exact) {
    const int n_t = static_cast<int>(traj.kappas.size());
    const int n = test.size();
    const Eigen::MatrixXd Ztest = test.feature_matrix();
    Eigen::VectorXd err(n_t);
    for (int t = 0; t < n_t; ++t) {
        const GpSurrogate s = traj.surrogate_at(t);
        Eigen::VectorXd num(n), ex(n);
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i) {
            num[i] = s.predict(Ztest.row(i).transpose());
        }
        for (int i = 0; i < n; ++i) ex[i] = exact(test.field(i), traj.kappas[t]);
        const double denom = ex.norm();
        err[t] = denom > 0.0 ? (num - ex).norm() / denom
                             : std::numeric_limits<double>::quiet_NaN();
    }
    return err;
}

const char* to_string(FlowVariant variant) {
    return variant == FlowVariant::wetterich ? "wetterich" : "wilson-polchinski";
}

}  // namespace frg
