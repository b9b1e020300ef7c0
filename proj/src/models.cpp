#include "frg/models.hpp"

#include <cmath>

#include "frg/errors.hpp"

namespace frg {

namespace {

void check_basis(const std::shared_ptr<const BasisDescriptor>& expected, const Field& field) {
    if (field.basis.get() != expected.get() || field.c.size() != expected->m) {
        throw ValidationError("field basis does not match the model basis");
    }
}

double relative_residual(double fd, double rhs) {
    const double scale = std::max({std::abs(fd), std::abs(rhs), 1e-8});
    return std::abs(fd - rhs) / scale;
}

}  // namespace

double wp_exact(const GaussianWpModel& model, const Field& J, double kappa) {
    check_basis(model.basis, J);
    const BasisDescriptor& b = *model.basis;
    double quad = 0.0;
    double logdet = 0.0;
    for (int a = 0; a < b.m; ++a) {
        const double gamma2 = b.lambda[a] + 1.0;
        const double reg = reg_r(model.regulator, b.lambda[a], kappa);
        quad += J.c[a] * J.c[a] / (gamma2 + reg);
        logdet += std::log1p(reg / gamma2);
    }
    return -0.5 * quad - 0.5 * logdet;
}

double wetterich_exact(const GaussianWetterichModel& model, const Field& phi, double kappa) {
    check_basis(model.basis, phi);
    const BasisDescriptor& b = *model.basis;
    double quad = 0.0;
    double logdet = 0.0;
    for (int a = 0; a < b.m; ++a) {
        const double gamma2 = model.gamma * (b.lambda[a] + model.m2);
        const double reg = reg_r(model.regulator, b.lambda[a], kappa);
        quad += gamma2 * phi.c[a] * phi.c[a];
        logdet += std::log1p(reg / gamma2);
    }
    return 0.5 * quad + 0.5 * logdet;
}

double bare_phi4(const Phi4BareAction& action, const Field& phi) {
    check_basis(action.basis, phi);
    const BasisDescriptor& b = *action.basis;
    const double kinetic = 0.5 * (b.lambda.array() * phi.c.array().square()).sum();

    if (action.domain == Phi4BareAction::Domain::continuum) {
        int n = action.quadrature_points;
        if (n == 0) n = 8 * b.m;
        if (n < 8 * b.m) throw ValidationError("continuum quadrature grid must have >= 8m points");
        // phi^4 of a band-limited field is band-limited, so the uniform
        // (periodic trapezoid) rule is spectrally exact at this oversampling.
        double pot = 0.0;
        for (int j = 0; j < n; ++j) {
            const double v = evaluate_field(phi, static_cast<double>(j) / n);
            pot += action.m2 * v * v / 2.0 + action.lambda * v * v * v * v / 24.0;
        }
        return kinetic + pot / n;
    }

    double pot = 0.0;
    for (int i = 0; i < b.Nx; ++i) {
        const double v = evaluate_field(phi, static_cast<double>(i));
        pot += action.m2 * v * v / 2.0 + action.lambda * v * v * v * v / 24.0;
    }
    return kinetic + pot;
}

double flow_residual(const GaussianWpModel& model, double kappa, const Field& J) {
    const BasisDescriptor& b = *model.basis;
    double rhs = 0.0;
    for (int a = 0; a < b.m; ++a) {
        const double dr = reg_dr_dkappa(model.regulator, b.lambda[a], kappa);
        if (dr == 0.0) continue;
        const double denom = b.lambda[a] + 1.0 + reg_r(model.regulator, b.lambda[a], kappa);
        const double hess = -1.0 / denom;
        const double grad = -J.c[a] / denom;
        rhs += 0.5 * dr * (hess + grad * grad);
    }
    const double h = 1e-6 * kappa;
    const double fd = (wp_exact(model, J, kappa + h) - wp_exact(model, J, kappa - h)) / (2.0 * h);
    return relative_residual(fd, rhs);
}

double flow_residual(const GaussianWetterichModel& model, double kappa, const Field& phi) {
    const BasisDescriptor& b = *model.basis;
    double rhs = 0.0;
    for (int a = 0; a < b.m; ++a) {
        const double dr = reg_dr_dkappa(model.regulator, b.lambda[a], kappa);
        if (dr == 0.0) continue;
        const double denom = model.gamma * (b.lambda[a] + model.m2) +
                             reg_r(model.regulator, b.lambda[a], kappa);
        rhs += 0.5 * dr / denom;
    }
    const double h = 1e-6 * kappa;
    const double fd =
        (wetterich_exact(model, phi, kappa + h) - wetterich_exact(model, phi, kappa - h)) /
        (2.0 * h);
    return relative_residual(fd, rhs);
}

}  // namespace frg
