#include "frg/ode.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "frg/errors.hpp"

namespace frg {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// 5th-minus-4th order error weights (e_i = b_i - b*_i).
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// Dense-output weights (Hairer, Norsett & Wanner, DOPRI5 CONTD5).
constexpr double d1 = -12715105075.0 / 11282082432.0;
constexpr double d3 = 87487479700.0 / 32700410799.0;
constexpr double d4 = -10690763975.0 / 1880347072.0;
constexpr double d5 = 701980252875.0 / 199316789632.0;
constexpr double d6 = -1453857185.0 / 822651844.0;
constexpr double d7 = 69997945.0 / 29380423.0;

struct DenseCoeffs {
    double t = 0.0, h = 0.0;
    Eigen::VectorXd r1, r2, r3, r4, r5;

    Eigen::VectorXd eval(double ts) const {
        const double theta = (ts - t) / h;
        const double theta1 = 1.0 - theta;
        return r1 + theta * (r2 + theta1 * (r3 + theta * (r4 + theta1 * r5)));
    }
};

class Dopri5 {
public:
    Dopri5(const OdeRhs& rhs, const OdeOptions& opt, Eigen::Index dim)
        : rhs_(rhs), opt_(opt) {
        for (auto& k : k_) k.resize(dim);
        ytmp_.resize(dim);
        yerr_.resize(dim);
    }

    OdeStats stats;

    // Integrates one smooth segment [t0, t1], emitting dense samples into
    // `out` rows [*sample_idx ...] for times in `sample_ts` that fall inside.
    void segment(double t0, double t1, Eigen::VectorXd& y,
                 const std::vector<double>& sample_ts, std::size_t* sample_idx,
                 Eigen::MatrixXd& out) {
        const double dir = t1 > t0 ? 1.0 : -1.0;
        double t = t0;
        double h = initial_step(t0, t1, y, dir);
        rhs_(t, y, k_[0]);
        ++stats.rhs_evals;

        double facold = 1e-4;
        int consecutive_rejects = 0;
        while (dir * (t1 - t) > 0.0) {
            if (stats.steps + stats.rejected > opt_.max_steps) {
                throw IntegrationFailure("ODE step budget exhausted at t = " + std::to_string(t),
                                         t);
            }
            if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(t)) || t + h == t) {
                if (opt_.enable_trapezoid_fallback) {
                    trapezoid_step(t, dir * std::max(std::abs(h) * 64.0,
                                                     1e-12 * std::max(1.0, std::abs(t))),
                                   t1, y, sample_ts, sample_idx, out);
                    rhs_(t, y, k_[0]);
                    ++stats.rhs_evals;
                    consecutive_rejects = 0;
                    h = dir * std::min(std::abs(h) * 64.0, std::abs(t1 - t));
                    continue;
                }
                throw IntegrationFailure("step size underflow at t = " + std::to_string(t), t);
            }
            if (dir * (t + h - t1) > 0.0) h = t1 - t;

            const double err = attempt_step(t, h, y);
            if (!std::isfinite(err)) {
                h *= 0.1;
                ++stats.rejected;
                ++consecutive_rejects;
                maybe_fallback(consecutive_rejects, t, h, t1, y, sample_ts, sample_idx, out);
                continue;
            }

            // PI controller (DOPRI5 defaults: beta = 0.04, safety = 0.9).
            constexpr double beta = 0.04, expo1 = 0.2 - beta * 0.75, safety = 0.9;
            constexpr double facmin = 0.2, facmax = 10.0;
            const double fac11 = std::pow(err, expo1);
            double fac = fac11 / std::pow(facold, beta);
            fac = std::max(1.0 / facmax, std::min(1.0 / facmin, fac / safety));
            const double hnew = h / fac;

            if (err <= 1.0) {
                facold = std::max(err, 1e-4);
                emit_samples(t, h, sample_ts, sample_idx, out);
                t += h;
                y = ynew_;
                k_[0] = k_[6];  // FSAL
                ++stats.steps;
                consecutive_rejects = 0;
                h = (consecutive_was_rejected_ && std::abs(hnew) > std::abs(h)) ? h : hnew;
                consecutive_was_rejected_ = false;
            } else {
                ++stats.rejected;
                ++consecutive_rejects;
                consecutive_was_rejected_ = true;
                h = h / std::min(1.0 / facmin, fac11 / safety);
                maybe_fallback(consecutive_rejects, t, h, t1, y, sample_ts, sample_idx, out);
                if (consecutive_rejects == 0) {  // fallback advanced t
                    rhs_(t, y, k_[0]);
                    ++stats.rhs_evals;
                }
            }
        }
        // Exact endpoint sample (avoids theta rounding at segment ends).
        while (*sample_idx < sample_ts.size() &&
               dir * (sample_ts[*sample_idx] - t1) <= 1e-12 * std::max(1.0, std::abs(t1))) {
            out.row(static_cast<Eigen::Index>(*sample_idx)) = y.transpose();
            ++*sample_idx;
        }
    }

private:
    const OdeRhs& rhs_;
    const OdeOptions& opt_;
    Eigen::VectorXd k_[7];
    Eigen::VectorXd ytmp_, yerr_, ynew_;
    DenseCoeffs dense_;
    bool consecutive_was_rejected_ = false;

    double error_norm(const Eigen::VectorXd& y, const Eigen::VectorXd& ynew,
                      const Eigen::VectorXd& yerr) const {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double sk = opt_.atol + opt_.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            const double r = yerr[i] / sk;
            sum += r * r;
        }
        return std::sqrt(sum / static_cast<double>(y.size()));
    }

    double initial_step(double t0, double t1, const Eigen::VectorXd& y, double dir) {
        if (opt_.initial_step != 0.0) {
            return dir * std::min(std::abs(opt_.initial_step), std::abs(t1 - t0));
        }
        Eigen::VectorXd f0(y.size());
        rhs_(t0, y, f0);
        ++stats.rhs_evals;
        const double dy = std::max(y.cwiseAbs().maxCoeff(), 1e-6);
        const double df = std::max(f0.cwiseAbs().maxCoeff(), 1e-6);
        double h = 0.01 * dy / df;
        h = std::min(h, 0.1 * std::abs(t1 - t0));
        return dir * std::max(h, 1e-12 * std::abs(t1 - t0));
    }

    // Returns the scaled error norm; fills ynew_, k_[6], dense_.
    double attempt_step(double t, double h, const Eigen::VectorXd& y) {
        ytmp_ = y + h * (a21 * k_[0]);
        rhs_(t + c2 * h, ytmp_, k_[1]);
        ytmp_ = y + h * (a31 * k_[0] + a32 * k_[1]);
        rhs_(t + c3 * h, ytmp_, k_[2]);
        ytmp_ = y + h * (a41 * k_[0] + a42 * k_[1] + a43 * k_[2]);
        rhs_(t + c4 * h, ytmp_, k_[3]);
        ytmp_ = y + h * (a51 * k_[0] + a52 * k_[1] + a53 * k_[2] + a54 * k_[3]);
        rhs_(t + c5 * h, ytmp_, k_[4]);
        ytmp_ = y + h * (a61 * k_[0] + a62 * k_[1] + a63 * k_[2] + a64 * k_[3] + a65 * k_[4]);
        rhs_(t + h, ytmp_, k_[5]);
        ynew_ = y + h * (b1 * k_[0] + b3 * k_[2] + b4 * k_[3] + b5 * k_[4] + b6 * k_[5]);
        rhs_(t + h, ynew_, k_[6]);
        stats.rhs_evals += 6;

        yerr_ = h * (e1 * k_[0] + e3 * k_[2] + e4 * k_[3] + e5 * k_[4] + e6 * k_[5] + e7 * k_[6]);
        if (!ynew_.allFinite()) return std::numeric_limits<double>::quiet_NaN();

        dense_.t = t;
        dense_.h = h;
        dense_.r1 = y;
        dense_.r2 = ynew_ - y;
        dense_.r3 = h * k_[0] - dense_.r2;
        dense_.r4 = dense_.r2 - h * k_[6] - dense_.r3;
        dense_.r5 = h * (d1 * k_[0] + d3 * k_[2] + d4 * k_[3] + d5 * k_[4] + d6 * k_[5] +
                         d7 * k_[6]);
        return error_norm(y, ynew_, yerr_);
    }

    void emit_samples(double t, double h, const std::vector<double>& sample_ts,
                      std::size_t* sample_idx, Eigen::MatrixXd& out) const {
        const double dir = h > 0 ? 1.0 : -1.0;
        while (*sample_idx < sample_ts.size()) {
            const double ts = sample_ts[*sample_idx];
            if (dir * (ts - (t + h)) > 0.0) break;
            out.row(static_cast<Eigen::Index>(*sample_idx)) = dense_.eval(ts).transpose();
            ++*sample_idx;
        }
    }

    // One implicit trapezoidal step of size h (fixed-point iteration), used as
    // an automatic fallback when the explicit pair keeps rejecting.
    void trapezoid_step(double& t, double h, double t1, Eigen::VectorXd& y,
                        const std::vector<double>& sample_ts, std::size_t* sample_idx,
                        Eigen::MatrixXd& out) {
        const double dir = h > 0 ? 1.0 : -1.0;
        if (dir * (t + h - t1) > 0.0) h = t1 - t;
        Eigen::VectorXd f0(y.size()), f1(y.size());
        rhs_(t, y, f0);
        Eigen::VectorXd ynext = y + h * f0;  // explicit Euler predictor
        ++stats.rhs_evals;
        for (int it = 0; it < 50; ++it) {
            rhs_(t + h, ynext, f1);
            ++stats.rhs_evals;
            Eigen::VectorXd yiter = y + 0.5 * h * (f0 + f1);
            const double delta = (yiter - ynext).cwiseAbs().maxCoeff();
            ynext.swap(yiter);
            if (delta <= 0.1 * opt_.atol + 0.1 * opt_.rtol * ynext.cwiseAbs().maxCoeff()) break;
        }
        if (!ynext.allFinite()) {
            throw NumericalError("non-finite state in trapezoidal fallback at t = " +
                                 std::to_string(t));
        }
        // Linear dense output across the fallback step.
        while (*sample_idx < sample_ts.size()) {
            const double ts = sample_ts[*sample_idx];
            if (dir * (ts - (t + h)) > 0.0) break;
            const double theta = (ts - t) / h;
            out.row(static_cast<Eigen::Index>(*sample_idx)) =
                ((1.0 - theta) * y + theta * ynext).transpose();
            ++*sample_idx;
        }
        t += h;
        y = ynext;
        ++stats.trapezoid_steps;
        ++stats.steps;
    }

    void maybe_fallback(int& consecutive_rejects, double& t, double& h, double t1,
                        Eigen::VectorXd& y, const std::vector<double>& sample_ts,
                        std::size_t* sample_idx, Eigen::MatrixXd& out) {
        if (!opt_.enable_trapezoid_fallback ||
            consecutive_rejects < opt_.fallback_after_rejections) {
            return;
        }
        trapezoid_step(t, h, t1, y, sample_ts, sample_idx, out);
        consecutive_rejects = 0;
    }
};

}  // namespace

OdeResult integrate_ode(const OdeRhs& rhs, double t0, double t1, const Eigen::VectorXd& y0,
                        const std::vector<double>& sample_ts, const OdeOptions& options,
                        const std::vector<double>& breakpoints) {
    if (t0 == t1) throw ValidationError("integrate_ode: empty time interval");
    const double dir = t1 > t0 ? 1.0 : -1.0;
    for (std::size_t i = 1; i < sample_ts.size(); ++i) {
        if (dir * (sample_ts[i] - sample_ts[i - 1]) < 0.0) {
            throw ValidationError("integrate_ode: sample times must be monotone toward t1");
        }
    }

    // Interior breakpoints, sorted in travel order, deduplicated.
    std::vector<double> cuts;
    for (double b : breakpoints) {
        if (dir * (b - t0) > 0.0 && dir * (t1 - b) > 0.0) cuts.push_back(b);
    }
    std::sort(cuts.begin(), cuts.end(),
              [dir](double a, double b) { return dir * a < dir * b; });
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    cuts.push_back(t1);

    OdeResult result;
    result.samples.resize(static_cast<Eigen::Index>(sample_ts.size()), y0.size());
    Dopri5 stepper(rhs, options, y0.size());
    Eigen::VectorXd y = y0;
    std::size_t sample_idx = 0;
    double t = t0;
    // Samples exactly at t0.
    while (sample_idx < sample_ts.size() &&
           dir * (sample_ts[sample_idx] - t0) <= 0.0) {
        result.samples.row(static_cast<Eigen::Index>(sample_idx)) = y.transpose();
        ++sample_idx;
    }
    for (double tend : cuts) {
        stepper.segment(t, tend, y, sample_ts, &sample_idx, result.samples);
        t = tend;
    }
    if (sample_idx != sample_ts.size()) {
        throw NumericalError("integrate_ode: dense output did not cover all sample times");
    }
    result.stats = stepper.stats;
    return result;
}

}  // namespace frg
