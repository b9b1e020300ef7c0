#include "frg/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "frg/errors.hpp"

namespace frg {

namespace {

double bare_u(double m2, double lambda, double phi) {
    return m2 * phi * phi / 2.0 + lambda * phi * phi * phi * phi / 24.0;
}

std::vector<double> litim_kink_scales(const ModeSpectrum& spectrum, double kappa_uv,
                                      double kappa_ir) {
    std::vector<double> cuts;
    for (const auto& [lambda, mult] : spectrum.modes) {
        (void)mult;
        if (lambda <= 0.0) continue;
        const double kink = std::sqrt(lambda);
        if (kink > kappa_ir && kink < kappa_uv) cuts.push_back(kink);
    }
    return cuts;
}

}  // namespace

Eigen::VectorXd LatticeModel::eigenvalues() const {
    if (Nx < 2) throw ValidationError("lattice needs at least two sites");
    Eigen::VectorXd lam(Nx);
    for (int q = 0; q < Nx; ++q) {
        const double s = std::sin(M_PI * q / Nx);
        lam[q] = 4.0 * s * s;
    }
    return lam;
}

ModeSpectrum ModeSpectrum::lattice(int Nx) {
    if (Nx < 2) throw ValidationError("lattice needs at least two sites");
    ModeSpectrum spec;
    spec.volume = Nx;
    // q and Nx - q share the eigenvalue 4 sin^2(pi q / Nx).
    for (int q = 0; q <= Nx / 2; ++q) {
        const double s = std::sin(M_PI * q / Nx);
        const int mult = (q == 0 || 2 * q == Nx) ? 1 : 2;
        spec.modes.emplace_back(4.0 * s * s, mult);
    }
    return spec;
}

ModeSpectrum ModeSpectrum::continuum_torus(int P) {
    if (P < 0) throw ValidationError("continuum truncation must be non-negative");
    ModeSpectrum spec;
    spec.volume = 1.0;
    spec.modes.emplace_back(0.0, 1);
    for (int p = 1; p <= P; ++p) {
        const double w = 2.0 * M_PI * p;
        spec.modes.emplace_back(w * w, 2);
    }
    return spec;
}

int ModeSpectrum::active(double kappa) const {
    if (!(kappa > 0.0)) throw ValidationError("active-mode count requires kappa > 0");
    int count = 0;
    for (const auto& [lambda, mult] : modes) {
        if (lambda < kappa * kappa) count += mult;
    }
    return count;
}

int active_modes(const LatticeModel& model, double kappa) {
    return ModeSpectrum::lattice(model.Nx).active(kappa);
}

PotentialGrid PotentialGrid::uniform(double phi_max, int n_phi) {
    if (!(phi_max > 0.0) || n_phi < 3) {
        throw ValidationError("potential grid requires phi_max > 0 and at least 3 points");
    }
    PotentialGrid grid;
    grid.phi_max = phi_max;
    grid.phi = Eigen::VectorXd::LinSpaced(n_phi, -phi_max, phi_max);
    grid.U = Eigen::VectorXd::Zero(n_phi);
    return grid;
}

PotentialGrid bare_potential_grid(double m2, double lambda, double phi_max, int n_phi) {
    PotentialGrid grid = PotentialGrid::uniform(phi_max, n_phi);
    for (int j = 0; j < grid.size(); ++j) grid.U[j] = bare_u(m2, lambda, grid.phi[j]);
    return grid;
}

Eigen::VectorXd fd_second_derivative(const PotentialGrid& grid) {
    const int n = grid.size();
    if (n < 4) throw ValidationError("curvature stencil needs at least 4 grid points");
    const double h2 = grid.spacing() * grid.spacing();
    Eigen::VectorXd d2(n);
    for (int j = 1; j + 1 < n; ++j) {
        d2[j] = (grid.U[j - 1] - 2.0 * grid.U[j] + grid.U[j + 1]) / h2;
    }
    d2[0] = (2.0 * grid.U[0] - 5.0 * grid.U[1] + 4.0 * grid.U[2] - grid.U[3]) / h2;
    d2[n - 1] =
        (2.0 * grid.U[n - 1] - 5.0 * grid.U[n - 2] + 4.0 * grid.U[n - 3] - grid.U[n - 4]) / h2;
    return d2;
}

std::vector<PotentialGrid> lpa_flow_samples(const ModeSpectrum& spectrum,
                                            const PotentialGrid& init,
                                            const std::vector<double>& kappas,
                                            const OdeOptions& options) {
    if (kappas.size() < 1) throw ValidationError("potential flow needs at least one scale");
    const double kappa_uv = kappas.front();
    const double kappa_ir = kappas.back();
    if (!(kappa_uv > kappa_ir) || !(kappa_ir > 0.0)) {
        throw ValidationError("potential flow requires kappa_uv > kappa_ir > 0");
    }
    PotentialGrid grid = init;
    const double c_omega = 1.0 / spectrum.volume;

    // Trial stages of the adaptive integrator may probe states past the
    // singularity even when the accepted trajectory never crosses it, so the
    // right-hand side reports a crossing as a non-finite value (which rejects
    // the step) and only a failed integration escalates to FlowSingularity.
    bool crossed = false;
    double cross_kappa = 0.0, cross_phi = 0.0;
    const OdeRhs rhs = [&](double kappa, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        PotentialGrid state = grid;
        state.U = y;
        const Eigen::VectorXd d2 = fd_second_derivative(state);
        const double front = c_omega * kappa * spectrum.active(kappa);
        dy.resize(y.size());
        for (int j = 0; j < state.size(); ++j) {
            const double denom = kappa * kappa + d2[j];
            if (!(denom > 0.0)) {
                crossed = true;
                cross_kappa = kappa;
                cross_phi = state.phi[j];
                dy[j] = std::numeric_limits<double>::quiet_NaN();
            } else {
                dy[j] = front / denom;
            }
        }
    };

    OdeResult result;
    try {
        result = integrate_ode(rhs, kappa_uv, kappa_ir, init.U, kappas, options,
                               litim_kink_scales(spectrum, kappa_uv, kappa_ir));
    } catch (const std::exception&) {
        if (crossed) {
            throw FlowSingularity("potential flow denominator crossed zero at kappa = " +
                                      std::to_string(cross_kappa) +
                                      ", phi = " + std::to_string(cross_phi),
                                  cross_kappa, cross_phi);
        }
        throw;
    }
    std::vector<PotentialGrid> out(kappas.size(), grid);
    for (std::size_t k = 0; k < kappas.size(); ++k) {
        out[k].U = result.samples.row(static_cast<Eigen::Index>(k)).transpose();
    }
    return out;
}

PotentialGrid lpa_flow(const ModeSpectrum& spectrum, const PotentialGrid& init, double kappa_uv,
                       double kappa_ir, const OdeOptions& options) {
    return lpa_flow_samples(spectrum, init, {kappa_uv, kappa_ir}, options).back();
}

PotentialGrid lpa_flow(const LatticeModel& model, const PotentialGrid& init, double kappa_uv,
                       double kappa_ir, const OdeOptions& options) {
    return lpa_flow(ModeSpectrum::lattice(model.Nx), init, kappa_uv, kappa_ir, options);
}

// ------------------------------------------------------------------ GP flow

double softplus(double x) {
    return x > 30.0 ? x : std::log1p(std::exp(x));
}

namespace {
double softplus_d(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

GpFlowEngine::GpFlowEngine(const LatticeModel& model, const PotentialGrid& init,
                           GpFlowOptions options)
    : model_(model), opt_(std::move(options)), grid_(init),
      spectrum_(ModeSpectrum::lattice(model.Nx)) {
    if (!(opt_.kappa_uv > opt_.kappa_ir) || !(opt_.kappa_ir > 0.0) || opt_.n_scales < 1) {
        throw ValidationError("GP flow schedule requires kappa_uv > kappa_ir > 0 and >= 1 interval");
    }
    const int n = grid_.size();
    const int q_max = opt_.q_max >= 0 ? opt_.q_max : std::min(n - 1, 1024);
    base_ = std::make_shared<CosineSpectralKernel>(opt_.sigma2, opt_.eta, opt_.beta, q_max,
                                                   grid_.phi_max);

    m0_.resize(n);
    m0dd_.resize(n);
    F_.resize(n, 2);
    Fdd_.resize(n, 2);
    for (int j = 0; j < n; ++j) {
        const double p = grid_.phi[j];
        m0_[j] = bare_u(model_.m2, model_.lambda, p);
        m0dd_[j] = model_.m2 + model_.lambda * p * p / 2.0;
        F_(j, 0) = p * p / 2.0;
        F_(j, 1) = p * p * p * p / 12.0;
        Fdd_(j, 0) = 1.0;
        Fdd_(j, 1) = p * p;
    }

    // Cosine Grams via the spectral factorization K = C^T diag(s) C with
    // C_qj = cos(w_q phi_j); the curvature Gram carries an extra -w_q^2.
    Eigen::MatrixXd C(q_max + 1, n);
    for (int q = 0; q <= q_max; ++q) {
        for (int j = 0; j < n; ++j) C(q, j) = std::cos(base_->freq(q) * grid_.phi[j]);
    }
    Eigen::VectorXd s(q_max + 1), sw2(q_max + 1);
    for (int q = 0; q <= q_max; ++q) {
        s[q] = base_->weight(q);
        sw2[q] = -s[q] * base_->freq(q) * base_->freq(q);
    }
    const Eigen::MatrixXd KU = C.transpose() * s.asDiagonal() * C;

    Eigen::MatrixXd A = KU;
    A.diagonal().array() += opt_.eps;
    A_.compute(A);
    if (A_.info() != Eigen::Success) {
        throw NumericalError("remainder Gram not positive definite after nugget");
    }

    // The closure kernel may use fewer cosine modes than the reconstruction
    // kernel: residual content above the cutoff maps to zero curvature (it is
    // orthogonal to the truncated span), instead of feeding w_q^2-amplified
    // noise into the predictor ODE.
    const int qc = opt_.closure_q_max >= 0 ? std::min(opt_.closure_q_max, q_max) : q_max;
    const auto Cc = C.topRows(qc + 1);
    const Eigen::MatrixXd KUc = Cc.transpose() * s.head(qc + 1).asDiagonal() * Cc;
    const Eigen::MatrixXd KUddc = Cc.transpose() * sw2.head(qc + 1).asDiagonal() * Cc;
    Eigen::MatrixXd KI = KUc + F_ * opt_.sigma_a * F_.transpose();
    KI.diagonal().array() += opt_.eps;
    Eigen::LLT<Eigen::MatrixXd> KI_llt(KI);
    if (KI_llt.info() != Eigen::Success) {
        throw NumericalError("predictor Gram not positive definite after nugget");
    }
    const Eigen::MatrixXd C2 = KUddc + Fdd_ * opt_.sigma_a * F_.transpose();
    M_ = KI_llt.solve(C2.transpose()).transpose();

    B_ = A_.solve(F_);
    G_ = F_.transpose() * B_;
}

Eigen::VectorXd GpFlowEngine::curvature(const Eigen::VectorXd& Y) const {
    return m0dd_ + M_ * (Y - m0_);
}

double GpFlowEngine::objective(const Eigen::VectorXd& Y, const Eigen::Vector2d& theta,
                               const Eigen::Vector2d& theta_prev,
                               Eigen::VectorXd* alpha_out) const {
    const Eigen::Vector2d sp(softplus(theta[0]), softplus(theta[1]));
    const Eigen::VectorXd r = Y - m0_ - F_ * sp;
    const Eigen::VectorXd alpha = A_.solve(r);
    if (alpha_out) *alpha_out = alpha;
    const Eigen::Vector2d d = theta - theta_prev;
    return 0.5 * r.dot(alpha) + 0.5 * opt_.gamma * d.squaredNorm();
}

GpFlowEngine::Projection GpFlowEngine::project(const Eigen::VectorXd& Y,
                                               const Eigen::Vector2d& theta_prev,
                                               int scale_index) const {
    Projection out;
    Eigen::Vector2d theta = theta_prev;
    Eigen::VectorXd alpha;
    double obj = objective(Y, theta, theta_prev, &alpha);
    out.objective_before = obj;

    for (int it = 0; it < opt_.max_gn_iters; ++it) {
        const Eigen::Vector2d sp(softplus(theta[0]), softplus(theta[1]));
        const Eigen::Vector2d spd(softplus_d(theta[0]), softplus_d(theta[1]));
        const Eigen::VectorXd r = Y - m0_ - F_ * sp;
        // J = dr/dtheta = -F diag(sp'); normal equations in theta.
        const Eigen::Vector2d Jt_Ainv_r = -spd.cwiseProduct(B_.transpose() * r);
        const Eigen::Vector2d rhs = -(Jt_Ainv_r + opt_.gamma * (theta - theta_prev));
        Eigen::Matrix2d H = spd.asDiagonal() * G_ * spd.asDiagonal();
        H.diagonal().array() += opt_.gamma;
        const double det = H.determinant();
        if (!(std::abs(det) > 0.0) || !std::isfinite(det)) {
            throw NumericalError("projection failure at scale index " +
                                 std::to_string(scale_index) + ": singular normal equations");
        }
        const Eigen::Vector2d delta = H.ldlt().solve(rhs);
        const Eigen::Vector2d candidate = theta + delta;
        Eigen::VectorXd alpha_new;
        const double obj_new = objective(Y, candidate, theta_prev, &alpha_new);
        if (!(obj_new < obj)) break;  // unit damping: reject an increasing step and stop
        theta = candidate;
        obj = obj_new;
        alpha = alpha_new;
        ++out.iterations;
    }

    out.theta = theta;
    out.alpha = alpha;
    out.objective_after = obj;
    const Eigen::Vector2d sp(softplus(theta[0]), softplus(theta[1]));
    // Reconstruction: prior mean + parametric part + remainder posterior mean.
    const Eigen::VectorXd r = Y - m0_ - F_ * sp;
    out.Y = m0_ + F_ * sp + (r - opt_.eps * alpha);  // K alpha = r - eps alpha
    return out;
}

GpFlowResult GpFlowEngine::run() {
    const int n = grid_.size();
    Eigen::VectorXd Y = grid_.U;
    Eigen::Vector2d theta(opt_.theta0, opt_.theta0);
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);

    const double c_omega = 1.0 / spectrum_.volume;
    // Same convention as the finite-difference potential flow: a crossing in a
    // trial stage yields a non-finite value (rejecting that step); only a
    // failed interval escalates to FlowSingularity.
    bool crossed = false;
    double cross_kappa = 0.0, cross_phi = 0.0;
    const OdeRhs rhs = [&](double kappa, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        dy.resize(y.size());
        if (opt_.force_zero_rhs) {
            dy.setZero();
            return;
        }
        const Eigen::VectorXd d2 = curvature(y);
        const double front = c_omega * kappa * spectrum_.active(kappa);
        for (int j = 0; j < n; ++j) {
            const double denom = kappa * kappa + d2[j];
            if (!(denom > 0.0)) {
                crossed = true;
                cross_kappa = kappa;
                cross_phi = grid_.phi[j];
                dy[j] = std::numeric_limits<double>::quiet_NaN();
            } else {
                dy[j] = front / denom;
            }
        }
    };

    GpFlowResult result;
    const std::vector<double> kinks =
        litim_kink_scales(spectrum_, opt_.kappa_uv, opt_.kappa_ir);
    double kappa = opt_.kappa_uv;
    for (int s = 1; s <= opt_.n_scales; ++s) {
        const double kappa_next =
            s == opt_.n_scales
                ? opt_.kappa_ir
                : opt_.kappa_uv + (opt_.kappa_ir - opt_.kappa_uv) * s / opt_.n_scales;
        std::vector<double> cuts;
        for (double k : kinks) {
            if (k < kappa && k > kappa_next) cuts.push_back(k);
        }
        Eigen::VectorXd predicted;
        bool have_prediction = false;
        if (opt_.predictor_substeps > 0) {
            // Fixed linearly-implicit substeps (two-stage Rosenbrock W-method,
            // L-stable for gamma_w = 1 + 1/sqrt(2)).  The closure Jacobian is
            // diag(-front / denom^2) * M, so one LU factorization per substep
            // size handles the w_q^2-stiff modes that an explicit step cannot;
            // substep boundaries include the regulator kinks inside the
            // interval.  A crossing or non-finite state falls back to the
            // adaptive path below.
            constexpr double gamma_w = 1.7071067811865476;
            std::vector<double> nodes;
            nodes.reserve(static_cast<std::size_t>(opt_.predictor_substeps) + cuts.size() + 1);
            for (int sub = 0; sub <= opt_.predictor_substeps; ++sub) {
                nodes.push_back(kappa + (kappa_next - kappa) * sub / opt_.predictor_substeps);
            }
            nodes.insert(nodes.end(), cuts.begin(), cuts.end());
            std::sort(nodes.begin(), nodes.end(), std::greater<double>());
            nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

            Eigen::VectorXd y = Y, f1, f2;
            Eigen::PartialPivLU<Eigen::MatrixXd> W;
            double h_lu = 0.0;
            crossed = false;
            bool ok = true;
            for (std::size_t sub = 0; ok && sub + 1 < nodes.size(); ++sub) {
                const double t = nodes[sub];
                const double h = nodes[sub + 1] - t;
                rhs(t, y, f1);
                if (!f1.allFinite()) {
                    ok = false;
                    break;
                }
                // One factorization serves the whole interval at large kappa;
                // in the small-kappa regime the denominators (and with them
                // the Jacobian) change quickly within an interval, so the
                // factorization is refreshed every substep there.
                if (h != h_lu || t < 2.0) {
                    const Eigen::VectorXd d2 = curvature(y);
                    const double front = c_omega * t * spectrum_.active(t);
                    Eigen::VectorXd cj(n);
                    for (int j = 0; j < n; ++j) {
                        const double denom = t * t + d2[j];
                        cj[j] = -front / (denom * denom);
                    }
                    Eigen::MatrixXd Wm = (-gamma_w * h) * cj.asDiagonal() * M_;
                    Wm.diagonal().array() += 1.0;
                    W.compute(Wm);
                    h_lu = h;
                }
                const Eigen::VectorXd k1 = W.solve(f1);
                rhs(t + h, y + h * k1, f2);
                if (!f2.allFinite()) {
                    ok = false;
                    break;
                }
                const Eigen::VectorXd k2 = W.solve(f2 - 2.0 * k1);
                y += (h / 2.0) * (3.0 * k1 + k2);
                if (!y.allFinite()) ok = false;
            }
            if (ok && y.allFinite()) {
                predicted = std::move(y);
                have_prediction = true;
            }
        }
        if (!have_prediction) {
            crossed = false;
            OdeResult ode;
            try {
                ode = integrate_ode(rhs, kappa, kappa_next, Y, {kappa_next}, opt_.ode, cuts);
            } catch (const std::exception&) {
                if (crossed) {
                    throw FlowSingularity("GP flow denominator crossed zero at kappa = " +
                                              std::to_string(cross_kappa) +
                                              ", phi = " + std::to_string(cross_phi),
                                          cross_kappa, cross_phi);
                }
                throw;
            }
            predicted = ode.samples.row(0).transpose();
        }
        const Projection proj = project(predicted, theta, s);
        Y = proj.Y;
        theta = proj.theta;
        alpha = proj.alpha;
        kappa = kappa_next;
        ++result.projections;
    }

    result.grid = grid_;
    result.grid.U = Y;
    result.theta = theta;
    result.m2 = model_.m2;
    result.lambda = model_.lambda;
    result.base_kernel = base_;

    // Spectral dual of the remainder: g(phi) = sum_q beta_q cos(w_q phi) with
    // beta_q = s_q sum_l alpha_l cos(w_q phi_l).
    const int q_max = base_->q_max();
    result.beta_dual.resize(q_max + 1);
    for (int q = 0; q <= q_max; ++q) {
        double acc = 0.0;
        for (int l = 0; l < n; ++l) acc += alpha[l] * std::cos(base_->freq(q) * grid_.phi[l]);
        result.beta_dual[q] = base_->weight(q) * acc;
    }
    return result;
}

GpFlowResult gp_flow(const LatticeModel& model, const PotentialGrid& init,
                     const GpFlowOptions& options) {
    return GpFlowEngine(model, init, options).run();
}

double GpFlowResult::U(double phi) const {
    double v = bare_u(m2, lambda, phi) + softplus(theta[0]) * phi * phi / 2.0 +
               softplus(theta[1]) * phi * phi * phi * phi / 12.0;
    for (int q = 0; q < beta_dual.size(); ++q) {
        v += beta_dual[q] * std::cos(base_kernel->freq(q) * phi);
    }
    return v;
}

double GpFlowResult::dU(double phi) const {
    double v = m2 * phi + lambda * phi * phi * phi / 6.0 + softplus(theta[0]) * phi +
               softplus(theta[1]) * phi * phi * phi / 3.0;
    for (int q = 1; q < beta_dual.size(); ++q) {
        const double w = base_kernel->freq(q);
        v -= beta_dual[q] * w * std::sin(w * phi);
    }
    return v;
}

double GpFlowResult::d2U(double phi) const {
    double v = m2 + lambda * phi * phi / 2.0 + softplus(theta[0]) +
               softplus(theta[1]) * phi * phi;
    for (int q = 1; q < beta_dual.size(); ++q) {
        const double w = base_kernel->freq(q);
        v -= beta_dual[q] * w * w * std::cos(w * phi);
    }
    return v;
}

// ----------------------------------------------------------- transfer matrix

TransferMatrixModel transfer_matrix(const LatticeModel& model, const PotentialGrid& grid, double c,
                                    double phi0) {
    TransferMatrixModel tm;
    tm.model = model;
    tm.phi = grid.phi;
    tm.c = c;
    tm.phi0 = phi0;
    const int n = grid.size();
    Eigen::VectorXd u2(n);
    for (int i = 0; i < n; ++i) {
        u2[i] = bare_u(model.m2, model.lambda, grid.phi[i]) - c * (grid.phi[i] - phi0);
    }
    tm.T2.resize(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double d = grid.phi[j] - grid.phi[i];
            // The potential terms are summed first so (i, j) and (j, i) round
            // identically and the matrix is symmetric bit for bit.
            tm.T2(i, j) = std::exp(-0.5 * (d * d + (u2[i] + u2[j])));
        }
    }
    if (!tm.T2.allFinite()) {
        throw NumericalError(
            "transfer matrix overflow; choose a reference shift closer to the tilted minimum");
    }
    return tm;
}

TransferMatrixModel transfer_matrix(const LatticeModel& model, const PotentialGrid& grid,
                                    double c) {
    // Reference shift at the grid minimizer of the tilted potential.
    int jmin = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < grid.size(); ++j) {
        const double v = bare_u(model.m2, model.lambda, grid.phi[j]) - c * grid.phi[j];
        if (v < best) {
            best = v;
            jmin = j;
        }
    }
    return transfer_matrix(model, grid, c, grid.phi[jmin]);
}

double tm_magnetization(const TransferMatrixModel& tm) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(tm.T2);
    if (eig.info() != Eigen::Success) throw NumericalError("transfer matrix eigensolve failed");
    const Eigen::VectorXd& mu = eig.eigenvalues();
    const double mu_max = mu.cwiseAbs().maxCoeff();
    if (!(mu.maxCoeff() > 0.0)) {
        throw NumericalError("transfer matrix has no positive leading eigenvalue");
    }
    const int nx = tm.model.Nx;
    double num = 0.0, den = 0.0;
    for (int k = 0; k < mu.size(); ++k) {
        if (mu[k] == 0.0) continue;
        // mu_k^Nx / mu_max^Nx with the sign tracked separately; T2 is positive
        // but not necessarily positive definite.
        double t = std::exp(nx * (std::log(std::abs(mu[k])) - std::log(mu_max)));
        if (mu[k] < 0.0 && nx % 2 != 0) t = -t;
        const Eigen::VectorXd v = eig.eigenvectors().col(k);
        num += t * v.dot(tm.phi.cwiseProduct(v));
        den += t;
    }
    if (!(std::abs(den) > 0.0)) throw NumericalError("transfer matrix trace vanished");
    return num / den;
}

double tm_susceptibility(const LatticeModel& model, const PotentialGrid& grid, double c,
                         double delta) {
    if (!(delta > 0.0) || !(delta < 1.0)) {
        throw ValidationError("susceptibility step must satisfy 0 < delta < 1");
    }
    const double dc = delta * std::abs(c);
    if (!(dc > 0.0) || !(c - dc > 0.0)) {
        throw ValidationError("susceptibility requires c - delta*c > 0");
    }
    const double mp = tm_magnetization(transfer_matrix(model, grid, c + dc));
    const double mm = tm_magnetization(transfer_matrix(model, grid, c - dc));
    return (mp - mm) / (2.0 * dc);
}

// -------------------------------------------------------------- observables

PotentialModel spline_potential(const PotentialGrid& grid) {
    const int n = grid.size();
    if (n < 3) throw ValidationError("spline needs at least 3 points");
    const double h = grid.spacing();
    // Natural cubic spline: tridiagonal solve for second derivatives at nodes.
    auto moments = std::make_shared<Eigen::VectorXd>(Eigen::VectorXd::Zero(n));
    {
        Eigen::VectorXd diag = Eigen::VectorXd::Constant(n - 2, 4.0);
        Eigen::VectorXd rhs(n - 2);
        for (int i = 1; i + 1 < n; ++i) {
            rhs[i - 1] = 6.0 * (grid.U[i - 1] - 2.0 * grid.U[i] + grid.U[i + 1]) / (h * h);
        }
        // Thomas algorithm with unit off-diagonals.
        for (int i = 1; i < n - 2; ++i) {
            const double w = 1.0 / diag[i - 1];
            diag[i] -= w;
            rhs[i] -= w * rhs[i - 1];
        }
        for (int i = n - 3; i >= 0; --i) {
            (*moments)[i + 1] = (rhs[i] - (i + 2 < n - 1 ? (*moments)[i + 2] : 0.0)) / diag[i];
        }
    }
    auto phi0 = grid.phi[0];
    auto U = std::make_shared<Eigen::VectorXd>(grid.U);
    const int last = n - 2;

    auto locate = [phi0, h, last](double x) {
        int i = static_cast<int>(std::floor((x - phi0) / h));
        return std::clamp(i, 0, last);
    };
    PotentialModel model;
    model.U = [=](double x) {
        const int i = locate(x);
        const double a = (phi0 + (i + 1) * h - x) / h, b = 1.0 - a;
        return a * (*U)[i] + b * (*U)[i + 1] +
               ((a * a * a - a) * (*moments)[i] + (b * b * b - b) * (*moments)[i + 1]) * h * h /
                   6.0;
    };
    model.dU = [=](double x) {
        const int i = locate(x);
        const double a = (phi0 + (i + 1) * h - x) / h, b = 1.0 - a;
        return ((*U)[i + 1] - (*U)[i]) / h +
               h / 6.0 *
                   ((3.0 * b * b - 1.0) * (*moments)[i + 1] - (3.0 * a * a - 1.0) * (*moments)[i]);
    };
    model.d2U = [=](double x) {
        const int i = locate(x);
        const double a = (phi0 + (i + 1) * h - x) / h, b = 1.0 - a;
        return a * (*moments)[i] + b * (*moments)[i + 1];
    };
    return model;
}

PotentialModel parametric_potential(const GpFlowResult& result) {
    auto shared = std::make_shared<GpFlowResult>(result);
    PotentialModel model;
    model.U = [shared](double x) { return shared->U(x); };
    model.dU = [shared](double x) { return shared->dU(x); };
    model.d2U = [shared](double x) { return shared->d2U(x); };
    return model;
}

std::vector<ObservablePoint> observables(const PotentialModel& potential,
                                         const std::vector<double>& c_grid, double phi_max) {
    if (!potential.U || !potential.dU || !potential.d2U) {
        throw ValidationError("observables require U, U', U'' evaluators");
    }
    std::vector<ObservablePoint> out;
    out.reserve(c_grid.size());
    constexpr int scan_points = 2001;
    for (double c : c_grid) {
        // Bracket scan of the tilted potential for the Newton start.
        double m = -phi_max;
        double best = std::numeric_limits<double>::infinity();
        for (int j = 0; j < scan_points; ++j) {
            const double x = -phi_max + 2.0 * phi_max * j / (scan_points - 1);
            const double v = potential.U(x) - c * x;
            if (v < best) {
                best = v;
                m = x;
            }
        }
        bool converged = false;
        for (int it = 0; it < 50; ++it) {
            const double f = potential.dU(m) - c;
            if (std::abs(f) <= 1e-10 * std::max(1.0, std::abs(c))) {
                converged = true;
                break;
            }
            const double fp = potential.d2U(m);
            if (!(std::abs(fp) > 0.0)) break;
            m -= f / fp;
        }
        if (!converged) {
            throw RootFailure("Newton iteration for the order parameter did not converge at c = " +
                              std::to_string(c));
        }
        const double d2 = potential.d2U(m);
        if (!(d2 > 0.0)) {
            throw NumericalError("order parameter sits at non-convex curvature at c = " +
                                 std::to_string(c));
        }
        out.push_back({c, m, 1.0 / d2});
    }
    return out;
}

std::vector<double> default_source_grid() {
    std::vector<double> c(18);
    const double l0 = -4.0, l1 = 0.4;
    for (int i = 0; i < 18; ++i) c[static_cast<std::size_t>(i)] = std::pow(10.0, l0 + (l1 - l0) * i / 17.0);
    return c;
}

}  // namespace frg
