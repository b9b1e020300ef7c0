#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace frg {

enum class BasisKind { continuum_torus, lattice_periodic };

// Truncated real eigenbasis of the (continuum or discrete) Laplacian on a
// periodic domain.  Continuum torus [0,1]: m = 2P+1 modes
//   e_0 = 1, e_{2p-1} = sqrt(2) cos(2 pi p x), e_{2p} = sqrt(2) sin(2 pi p x),
// with eigenvalues (2 pi p)^2.  Periodic lattice with N_x sites: m = N_x modes
// ordered by wavenumber q = 0..N_x-1 with eigenvalues 4 sin^2(pi q / N_x);
// the stored eigenvectors are the real DFT basis, orthonormal under the
// discrete inner product sum_i u_i v_i.
struct BasisDescriptor {
    BasisKind kind;
    int P = 0;    // continuum truncation (modes -P..P)
    int Nx = 0;   // lattice site count
    int m = 0;    // mode count
    Eigen::VectorXd lambda;   // eigenvalue per mode, size m
    std::vector<int> p;       // integer frequency index per mode

    // (eigenvalue, multiplicity) pairs over distinct eigenvalues, in stored
    // order of first occurrence; multiplicities sum to m.
    std::vector<std::pair<double, int>> multiplicities() const;

    // Basis function alpha at continuum position x in [0,1) or lattice site i.
    double e(int alpha, double x) const;

    // Row of basis values (e_0(x), ..., e_{m-1}(x)).
    Eigen::VectorXd row(double x) const;
};

// size = P for the continuum torus (P >= 0), N_x for the lattice (N_x >= 2).
std::shared_ptr<const BasisDescriptor> build_basis(BasisKind kind, int size);

struct Field {
    std::shared_ptr<const BasisDescriptor> basis;
    Eigen::VectorXd c;
};

// Field value at x (continuum position in [0,1) or lattice site index).
double evaluate_field(const Field& field, double x);

// Spectral feature map: identity on stored coefficients.
Eigen::VectorXd features(const Field& field);

// Pointwise feature map: field values at a prescribed grid.
Eigen::VectorXd features_pointwise(const Field& field, const std::vector<double>& grid);

enum class CovarianceSpec { correlated, identity };
enum class DecayRule { inverse_frequency, inverse_frequency_3_2, none };

struct Ensemble {
    std::shared_ptr<const BasisDescriptor> basis;
    std::vector<Eigen::VectorXd> fields;
    std::uint64_t seed = 0;
    CovarianceSpec cov = CovarianceSpec::identity;
    DecayRule decay = DecayRule::none;

    int size() const { return static_cast<int>(fields.size()); }
    Field field(int i) const { return Field{basis, fields[static_cast<std::size_t>(i)]}; }
    // N x m matrix of spectral features (one field per row).
    Eigen::MatrixXd feature_matrix() const;
};

// Draw n coefficient vectors from N(0, Sigma) with Sigma = A^T A (A i.i.d.
// standard normal, m x m, drawn once per seed) or Sigma = I, then rescale
// mode-p coefficients by 1/|p| (p != 0) or (1+|p|)^{-3/2}.  Deterministic
// per (seed, cov, decay).
Ensemble sample_ensemble(std::shared_ptr<const BasisDescriptor> basis, int n,
                         std::uint64_t seed, CovarianceSpec cov, DecayRule decay);

const char* to_string(BasisKind kind);
const char* to_string(CovarianceSpec cov);
const char* to_string(DecayRule decay);

}  // namespace frg
