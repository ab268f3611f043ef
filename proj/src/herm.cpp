#include "jm/herm.hpp"

#include <cmath>
#include <stdexcept>

namespace jm {

Hermitian::Hermitian(Eigen::MatrixXcd raw) {
  if (raw.rows() != raw.cols() || raw.rows() < 1) {
    throw std::invalid_argument("Hermitian: matrix must be square, dim >= 1");
  }
  m_ = 0.5 * (raw + raw.adjoint());
}

Hermitian Hermitian::zero(int dim) {
  return Hermitian(Eigen::MatrixXcd::Zero(dim, dim));
}

Hermitian Hermitian::identity(int dim) {
  return Hermitian(Eigen::MatrixXcd::Identity(dim, dim));
}

Hermitian Hermitian::operator+(const Hermitian& o) const {
  return Hermitian(m_ + o.m_);
}

Hermitian Hermitian::operator-(const Hermitian& o) const {
  return Hermitian(m_ - o.m_);
}

Hermitian Hermitian::operator-() const { return Hermitian(-m_); }

Hermitian Hermitian::operator*(double s) const { return Hermitian(s * m_); }

Hermitian& Hermitian::operator+=(const Hermitian& o) {
  m_ += o.m_;
  return *this;
}

HermitianBasis hermitian_basis(int dim) {
  if (dim < 1) throw std::invalid_argument("hermitian_basis: dim >= 1");
  HermitianBasis basis;
  basis.dim = dim;
  basis.elements.reserve(static_cast<size_t>(dim) * dim);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);

  basis.elements.push_back(Hermitian::identity(dim) * (1.0 / std::sqrt(dim)));

  for (int j = 0; j < dim; ++j) {
    for (int k = j + 1; k < dim; ++k) {
      Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
      m(j, k) = inv_sqrt2;
      m(k, j) = inv_sqrt2;
      basis.elements.push_back(Hermitian(m));
    }
  }
  for (int j = 0; j < dim; ++j) {
    for (int k = j + 1; k < dim; ++k) {
      Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
      m(j, k) = Complex(0.0, -inv_sqrt2);
      m(k, j) = Complex(0.0, inv_sqrt2);
      basis.elements.push_back(Hermitian(m));
    }
  }
  for (int l = 1; l < dim; ++l) {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
    const double norm = 1.0 / std::sqrt(static_cast<double>(l) * (l + 1));
    for (int j = 0; j < l; ++j) m(j, j) = norm;
    m(l, l) = -static_cast<double>(l) * norm;
    basis.elements.push_back(Hermitian(m));
  }
  return basis;
}

Eigen::VectorXd eigenvalues(const Hermitian& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.mat(),
                                                     Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double min_eigenvalue(const Hermitian& h) { return eigenvalues(h)(0); }

double max_eigenvalue(const Hermitian& h) {
  return eigenvalues(h)(h.dim() - 1);
}

int support_rank(const Hermitian& h, double tol) {
  if (tol <= 0.0) throw std::invalid_argument("support_rank: tol > 0");
  const Eigen::VectorXd ev = eigenvalues(h);
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  int rank = 0;
  for (int i = 0; i < ev.size(); ++i) {
    if (std::abs(ev(i)) > tol * scale) ++rank;
  }
  return rank;
}

Eigen::MatrixXcd support_basis(const Hermitian& h, double tol) {
  if (tol <= 0.0) throw std::invalid_argument("support_basis: tol > 0");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.mat());
  const Eigen::VectorXd ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  std::vector<int> keep;
  for (int i = 0; i < ev.size(); ++i) {
    if (std::abs(ev(i)) > tol * scale) keep.push_back(i);
  }
  Eigen::MatrixXcd v(h.dim(), static_cast<int>(keep.size()));
  for (size_t c = 0; c < keep.size(); ++c) v.col(c) = es.eigenvectors().col(keep[c]);
  return v;
}

double frobenius_inner(const Hermitian& a, const Hermitian& b) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("frobenius_inner: dimension mismatch");
  }
  return (a.mat() * b.mat()).trace().real();
}

double frobenius_norm(const Hermitian& h) { return h.mat().norm(); }

Eigen::MatrixXd real_embedding(const Hermitian& h) {
  const int d = h.dim();
  Eigen::MatrixXd w(2 * d, 2 * d);
  const Eigen::MatrixXd re = h.mat().real();
  const Eigen::MatrixXd im = h.mat().imag();
  w.topLeftCorner(d, d) = re;
  w.topRightCorner(d, d) = -im;
  w.bottomLeftCorner(d, d) = im;
  w.bottomRightCorner(d, d) = re;
  return w;
}

Hermitian from_real_embedding(const Eigen::MatrixXd& w) {
  if (w.rows() != w.cols() || w.rows() % 2 != 0) {
    throw std::invalid_argument("from_real_embedding: need even square matrix");
  }
  const int d = static_cast<int>(w.rows()) / 2;
  const Eigen::MatrixXd re =
      0.5 * (w.topLeftCorner(d, d) + w.bottomRightCorner(d, d));
  const Eigen::MatrixXd im =
      0.5 * (w.bottomLeftCorner(d, d) - w.topRightCorner(d, d));
  Eigen::MatrixXcd m = re.cast<Complex>() + Complex(0, 1) * im.cast<Complex>();
  return Hermitian(m);
}

}  // namespace jm
