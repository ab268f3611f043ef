#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace jm {

using Complex = std::complex<double>;

// Tolerances used repo-wide. Every verdict in this library is relative to
// these unless an operation takes an explicit tol.
inline constexpr double kEpsHerm = 1e-12;
inline constexpr double kEpsEq = 1e-8;
inline constexpr double kEpsPsd = 1e-8;

// A d x d complex Hermitian matrix. Hermiticity is enforced at construction
// by symmetrization (X + X^dag)/2, so downstream layers may assume exact
// self-adjointness.
class Hermitian {
 public:
  Hermitian() = default;
  explicit Hermitian(Eigen::MatrixXcd raw);

  static Hermitian zero(int dim);
  static Hermitian identity(int dim);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Eigen::MatrixXcd& mat() const { return m_; }

  Hermitian operator+(const Hermitian& o) const;
  Hermitian operator-(const Hermitian& o) const;
  Hermitian operator-() const;
  Hermitian operator*(double s) const;
  Hermitian& operator+=(const Hermitian& o);

 private:
  Eigen::MatrixXcd m_;
};

inline Hermitian operator*(double s, const Hermitian& h) { return h * s; }

// Orthonormal basis of Herm(d) under the Frobenius inner product tr(A B).
// Ordering is fixed: identity first, then symmetric off-diagonal,
// antisymmetric off-diagonal, diagonal traceless (generalized Gell-Mann
// family plus scaled identity).
struct HermitianBasis {
  int dim = 0;
  std::vector<Hermitian> elements;
};

HermitianBasis hermitian_basis(int dim);

// Eigenvalues in ascending order (symmetric eigensolve, deterministic).
Eigen::VectorXd eigenvalues(const Hermitian& h);
double min_eigenvalue(const Hermitian& h);
double max_eigenvalue(const Hermitian& h);

// Number of eigenvalues with |lambda| > tol * max(1, spectral norm).
int support_rank(const Hermitian& h, double tol = 1e-9);

// Columns span the support (eigenvectors of eigenvalues above the relative
// cutoff); d x r with r = support_rank.
Eigen::MatrixXcd support_basis(const Hermitian& h, double tol = 1e-9);

double frobenius_inner(const Hermitian& a, const Hermitian& b);
double frobenius_norm(const Hermitian& h);

// [[Re H, -Im H], [Im H, Re H]]: real symmetric 2d x 2d with the spectrum of
// H doubled in multiplicity; H >= 0 iff the embedding is >= 0.
Eigen::MatrixXd real_embedding(const Hermitian& h);

// Adjoint of real_embedding up to symmetrization: recovers the Hermitian
// part of a real symmetric 2d x 2d block.
Hermitian from_real_embedding(const Eigen::MatrixXd& w);

}  // namespace jm
