#include "frg/basis.hpp"

#include <cmath>

#include "frg/errors.hpp"
#include "frg/rng.hpp"

namespace frg {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

std::vector<std::pair<double, int>> BasisDescriptor::multiplicities() const {
    std::vector<std::pair<double, int>> out;
    for (int alpha = 0; alpha < m; ++alpha) {
        const double lam = lambda[alpha];
        bool found = false;
        for (auto& [val, count] : out) {
            if (std::abs(val - lam) <= 1e-12 * std::max(1.0, std::abs(val))) {
                ++count;
                found = true;
                break;
            }
        }
        if (!found) out.emplace_back(lam, 1);
    }
    return out;
}

double BasisDescriptor::e(int alpha, double x) const {
    if (alpha < 0 || alpha >= m) throw ValidationError("basis mode index out of range");
    if (kind == BasisKind::continuum_torus) {
        if (x < 0.0 || x >= 1.0) throw ValidationError("continuum position outside [0,1)");
        if (alpha == 0) return 1.0;
        const int freq = p[static_cast<std::size_t>(alpha)];
        const double arg = kTwoPi * freq * x;
        return (alpha % 2 == 1) ? std::sqrt(2.0) * std::cos(arg) : std::sqrt(2.0) * std::sin(arg);
    }
    const int i = static_cast<int>(x);
    if (static_cast<double>(i) != x || i < 0 || i >= Nx) {
        throw ValidationError("lattice site index outside 0..N_x-1");
    }
    const int q = alpha;  // stored in wavenumber order
    const double norm1 = 1.0 / std::sqrt(static_cast<double>(Nx));
    const double norm2 = std::sqrt(2.0 / static_cast<double>(Nx));
    if (q == 0) return norm1;
    if (2 * q == Nx) return (i % 2 == 0) ? norm1 : -norm1;  // alternating mode, even N_x
    const double arg = kTwoPi * static_cast<double>(p[static_cast<std::size_t>(alpha)]) * i / Nx;
    // Wavenumbers q < N_x/2 carry the cosine branch, q > N_x/2 the sine branch
    // of the same frequency pair, so the set stays orthonormal.
    return (2 * q < Nx) ? norm2 * std::cos(arg) : norm2 * std::sin(arg);
}

Eigen::VectorXd BasisDescriptor::row(double x) const {
    Eigen::VectorXd out(m);
    for (int alpha = 0; alpha < m; ++alpha) out[alpha] = e(alpha, x);
    return out;
}

std::shared_ptr<const BasisDescriptor> build_basis(BasisKind kind, int size) {
    auto basis = std::make_shared<BasisDescriptor>();
    basis->kind = kind;
    if (kind == BasisKind::continuum_torus) {
        if (size < 0) throw ValidationError("continuum truncation P must be >= 0");
        basis->P = size;
        basis->m = 2 * size + 1;
        basis->lambda.resize(basis->m);
        basis->p.resize(static_cast<std::size_t>(basis->m));
        for (int alpha = 0; alpha < basis->m; ++alpha) {
            const int freq = (alpha + 1) / 2;
            basis->p[static_cast<std::size_t>(alpha)] = freq;
            basis->lambda[alpha] = (kTwoPi * freq) * (kTwoPi * freq);
        }
    } else {
        if (size < 2) throw ValidationError("lattice site count N_x must be >= 2");
        basis->Nx = size;
        basis->m = size;
        basis->lambda.resize(size);
        basis->p.resize(static_cast<std::size_t>(size));
        for (int q = 0; q < size; ++q) {
            const double s = std::sin(M_PI * q / static_cast<double>(size));
            basis->lambda[q] = 4.0 * s * s;
            basis->p[static_cast<std::size_t>(q)] = (2 * q <= size) ? q : size - q;
        }
    }
    return basis;
}

double evaluate_field(const Field& field, double x) {
    const BasisDescriptor& b = *field.basis;
    if (field.c.size() != b.m) throw ValidationError("coefficient length does not match basis");
    double value = 0.0;
    for (int alpha = 0; alpha < b.m; ++alpha) value += field.c[alpha] * b.e(alpha, x);
    return value;
}

Eigen::VectorXd features(const Field& field) { return field.c; }

Eigen::VectorXd features_pointwise(const Field& field, const std::vector<double>& grid) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t j = 0; j < grid.size(); ++j) {
        out[static_cast<Eigen::Index>(j)] = evaluate_field(field, grid[j]);
    }
    return out;
}

Eigen::MatrixXd Ensemble::feature_matrix() const {
    const int n = size();
    const int m = basis->m;
    Eigen::MatrixXd Z(n, m);
    for (int i = 0; i < n; ++i) Z.row(i) = fields[static_cast<std::size_t>(i)].transpose();
    return Z;
}

Ensemble sample_ensemble(std::shared_ptr<const BasisDescriptor> basis, int n,
                         std::uint64_t seed, CovarianceSpec cov, DecayRule decay) {
    if (n < 1) throw ValidationError("ensemble size must be >= 1");
    const int m = basis->m;

    // Covariance factor drawn once per seed from its own stream so that the
    // per-field draws are independent of it.
    Eigen::MatrixXd A;
    if (cov == CovarianceSpec::correlated) {
        CounterRng rng(seed, /*stream=*/1);
        A.resize(m, m);
        for (int r = 0; r < m; ++r) {
            for (int c = 0; c < m; ++c) A(r, c) = rng.normal();
        }
    }

    Ensemble ensemble;
    ensemble.basis = basis;
    ensemble.seed = seed;
    ensemble.cov = cov;
    ensemble.decay = decay;
    ensemble.fields.reserve(static_cast<std::size_t>(n));

    CounterRng rng(seed, /*stream=*/2);
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd g(m);
        for (int alpha = 0; alpha < m; ++alpha) g[alpha] = rng.normal();
        Eigen::VectorXd c = (cov == CovarianceSpec::correlated) ? Eigen::VectorXd(A.transpose() * g)
                                                                : g;
        for (int alpha = 0; alpha < m; ++alpha) {
            const int freq = basis->p[static_cast<std::size_t>(alpha)];
            if (decay == DecayRule::inverse_frequency && freq != 0) {
                c[alpha] /= static_cast<double>(freq);
            } else if (decay == DecayRule::inverse_frequency_3_2) {
                c[alpha] *= std::pow(1.0 + static_cast<double>(freq), -1.5);
            }
        }
        ensemble.fields.push_back(std::move(c));
    }
    return ensemble;
}

const char* to_string(BasisKind kind) {
    return kind == BasisKind::continuum_torus ? "continuum-torus" : "lattice-periodic";
}
const char* to_string(CovarianceSpec cov) {
    return cov == CovarianceSpec::correlated ? "correlated" : "identity";
}
const char* to_string(DecayRule decay) {
    switch (decay) {
        case DecayRule::inverse_frequency: return "inverse-frequency";
        case DecayRule::inverse_frequency_3_2: return "inverse-frequency-3/2";
        default: return "none";
    }
}

}  // namespace frg
