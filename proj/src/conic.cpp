#include "jm/conic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace jm::conic {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kSqrt2 = 1.4142135623730951;

// ---------------------------------------------------------------------------
// svec coordinates for real symmetric matrices: off-diagonals carry sqrt(2)
// so that <A, B>_F = svec(A) . svec(B).

int svdim(int n) { return n * (n + 1) / 2; }

VectorXd svec(const MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  VectorXd v(svdim(n));
  int idx = 0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i <= j; ++i) {
      v(idx++) = (i == j) ? m(i, j) : kSqrt2 * m(i, j);
    }
  }
  return v;
}

MatrixXd smat(const VectorXd& v, int n) {
  MatrixXd m(n, n);
  int idx = 0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i <= j; ++i) {
      const double x = v(idx++);
      if (i == j) {
        m(i, j) = x;
      } else {
        m(i, j) = x / kSqrt2;
        m(j, i) = x / kSqrt2;
      }
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Vectorization: each Hermitian variable of dimension d contributes d^2 real
// coordinates (its expansion in the orthonormal hermitian_basis). Equalities
// and the objective are assembled in complex space; PSD blocks through the
// real 2d x 2d embedding.

struct PsdBlockData {
  int herm_dim = 0;  // complex dimension of the constraint expression
  int n = 0;         // embedded dimension (2 * herm_dim)
  VectorXd f0;       // svec of the embedded constant
  MatrixXd F;        // svdim(n) x num_coords
};

struct VecProblem {
  int num_coords = 0;
  std::vector<int> offset;
  std::vector<HermitianBasis> bases;
  MatrixXd eq_a;  // rows x num_coords
  VectorXd eq_b;
  std::vector<PsdBlockData> blocks;
  VectorXd c;        // internal objective, always maximized
  double sense = 1;  // +1 maximize, -1 minimize (already applied to c)
};

void check_problem(const SdpProblem& p) {
  const int nv = static_cast<int>(p.variables.size());
  for (const auto& [name, dim] : p.variables) {
    if (dim < 1) throw std::invalid_argument("variable '" + name + "': dim >= 1");
  }
  auto check_expr = [&](const AffineExpr& e, const char* where) {
    if (e.dim < 1) throw std::invalid_argument(std::string(where) + ": dim >= 1");
    if (e.constant.dim() != e.dim)
      throw std::invalid_argument(std::string(where) + ": constant dimension mismatch");
    for (const Term& t : e.terms) {
      if (t.var < 0 || t.var >= nv)
        throw std::invalid_argument(std::string(where) + ": unknown variable");
      const int vd = p.variables[t.var].second;
      switch (t.kind) {
        case Term::Kind::kScaled:
          if (vd != e.dim)
            throw std::invalid_argument(std::string(where) + ": scaled term dimension mismatch");
          break;
        case Term::Kind::kScalarTimesOp:
          if (vd != 1 || t.op.dim() != e.dim)
            throw std::invalid_argument(std::string(where) + ": scalar term dimension mismatch");
          break;
        case Term::Kind::kPairing:
          if (e.dim != 1 || t.op.dim() != vd)
            throw std::invalid_argument(std::string(where) + ": pairing term dimension mismatch");
          break;
        case Term::Kind::kConjugated:
          if (t.conj_map.rows() != e.dim || t.conj_map.cols() != vd)
            throw std::invalid_argument(std::string(where) + ": conjugation map shape mismatch");
          break;
      }
    }
  };
  for (const auto& e : p.equalities) check_expr(e, "equality");
  for (const auto& e : p.psd) check_expr(e, "psd constraint");
  for (const auto& [var, op] : p.objective) {
    if (var < 0 || var >= nv) throw std::invalid_argument("objective: unknown variable");
    if (op.dim() != p.variables[var].second)
      throw std::invalid_argument("objective: pairing dimension mismatch");
  }
}

VecProblem vectorize(const SdpProblem& p) {
  VecProblem vp;
  vp.sense = p.maximize ? 1.0 : -1.0;
  const int nv = static_cast<int>(p.variables.size());
  vp.offset.resize(nv);
  vp.bases.reserve(nv);
  int coords = 0;
  for (int v = 0; v < nv; ++v) {
    vp.offset[v] = coords;
    vp.bases.push_back(hermitian_basis(p.variables[v].second));
    coords += p.variables[v].second * p.variables[v].second;
  }
  vp.num_coords = coords;

  int rows = 0;
  for (const auto& e : p.equalities) rows += e.dim * e.dim;
  vp.eq_a = MatrixXd::Zero(rows, coords);
  vp.eq_b = VectorXd::Zero(rows);
  int r0 = 0;
  for (const auto& e : p.equalities) {
    const HermitianBasis out = hermitian_basis(e.dim);
    const int q2 = e.dim * e.dim;
    for (int r = 0; r < q2; ++r) {
      vp.eq_b(r0 + r) = -frobenius_inner(out.elements[r], e.constant);
    }
    for (const Term& t : e.terms) {
      const int off = vp.offset[t.var];
      switch (t.kind) {
        case Term::Kind::kScaled:
          for (int r = 0; r < q2; ++r) vp.eq_a(r0 + r, off + r) += t.coeff;
          break;
        case Term::Kind::kScalarTimesOp:
          for (int r = 0; r < q2; ++r)
            vp.eq_a(r0 + r, off) += frobenius_inner(out.elements[r], t.op);
          break;
        case Term::Kind::kPairing: {
          const auto& vb = vp.bases[t.var];
          for (size_t s = 0; s < vb.elements.size(); ++s)
            vp.eq_a(r0, off + static_cast<int>(s)) +=
                frobenius_inner(t.op, vb.elements[s]);
          break;
        }
        case Term::Kind::kConjugated: {
          const auto& vb = vp.bases[t.var];
          for (size_t s = 0; s < vb.elements.size(); ++s) {
            const Hermitian lifted(t.conj_map * vb.elements[s].mat() *
                                   t.conj_map.adjoint());
            for (int r = 0; r < q2; ++r)
              vp.eq_a(r0 + r, off + static_cast<int>(s)) +=
                  t.coeff * frobenius_inner(out.elements[r], lifted);
          }
          break;
        }
      }
    }
    r0 += q2;
  }

  for (const auto& e : p.psd) {
    PsdBlockData b;
    b.herm_dim = e.dim;
    b.n = 2 * e.dim;
    b.f0 = svec(real_embedding(e.constant));
    b.F = MatrixXd::Zero(svdim(b.n), coords);
    for (const Term& t : e.terms) {
      const int off = vp.offset[t.var];
      const auto& vb = vp.bases[t.var];
      switch (t.kind) {
        case Term::Kind::kScaled:
          for (size_t s = 0; s < vb.elements.size(); ++s)
            b.F.col(off + static_cast<int>(s)) +=
                t.coeff * svec(real_embedding(vb.elements[s]));
          break;
        case Term::Kind::kScalarTimesOp:
          b.F.col(off) += svec(real_embedding(t.op));
          break;
        case Term::Kind::kPairing:
          for (size_t s = 0; s < vb.elements.size(); ++s) {
            const double w = frobenius_inner(t.op, vb.elements[s]);
            b.F.col(off + static_cast<int>(s)) +=
                w * svec(MatrixXd::Identity(2, 2));
          }
          break;
        case Term::Kind::kConjugated:
          for (size_t s = 0; s < vb.elements.size(); ++s) {
            const Hermitian lifted(t.conj_map * vb.elements[s].mat() *
                                   t.conj_map.adjoint());
            b.F.col(off + static_cast<int>(s)) +=
                t.coeff * svec(real_embedding(lifted));
          }
          break;
      }
    }
    vp.blocks.push_back(std::move(b));
  }

  vp.c = VectorXd::Zero(coords);
  for (const auto& [var, op] : p.objective) {
    const int off = vp.offset[var];
    const auto& vb = vp.bases[var];
    for (size_t s = 0; s < vb.elements.size(); ++s)
      vp.c(off + static_cast<int>(s)) +=
          vp.sense * frobenius_inner(op, vb.elements[s]);
  }
  return vp;
}

// ---------------------------------------------------------------------------
// Interior-point core: maximize c.z subject to smat(f0_j + F_j z) >= 0,
// NT-scaled Mehrotra predictor-corrector. The caller provides a strictly
// feasible z0.

struct IpmBlock {
  int n = 0;
  VectorXd f0;
  MatrixXd F;
};

struct IpmOutcome {
  bool converged = false;
  bool diverging = false;
  int iters = 0;
  double mu = 0.0;
  double dres = 0.0;
  VectorXd z;
  std::vector<MatrixXd> s;
  std::vector<MatrixXd> y;
};

double min_eig_sym(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

// Largest alpha <= 1 with X + alpha * dX PSD, with a 0.99 backoff.
double step_length(const MatrixXd& x, const MatrixXd& dx) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(x);
  if (es.eigenvalues()(0) <= 0.0) return 0.0;
  const VectorXd isq = es.eigenvalues().cwiseSqrt().cwiseInverse();
  const MatrixXd t =
      isq.asDiagonal() * es.eigenvectors().transpose() * dx * es.eigenvectors() *
      isq.asDiagonal();
  const double lo = min_eig_sym(0.5 * (t + t.transpose()));
  if (lo >= -1e-16) return 1.0;
  return std::min(1.0, -0.99 / lo);
}

IpmOutcome run_ipm(const std::vector<IpmBlock>& blocks, const VectorXd& c,
                   const VectorXd& z0, int max_iters) {
  const int nk = static_cast<int>(c.size());
  const int nb = static_cast<int>(blocks.size());
  IpmOutcome out;
  out.z = z0;
  out.s.resize(nb);
  out.y.resize(nb);

  int n_tot = 0;
  double data_scale = 1.0;
  for (int j = 0; j < nb; ++j) {
    n_tot += blocks[j].n;
    data_scale = std::max(data_scale, blocks[j].f0.cwiseAbs().maxCoeff());
    out.s[j] = smat(blocks[j].f0 + blocks[j].F * z0, blocks[j].n);
    out.y[j] = MatrixXd::Identity(blocks[j].n, blocks[j].n);
    if (min_eig_sym(out.s[j]) <= 0.0) return out;  // start must be interior
  }
  const double c_scale = std::max(1.0, c.cwiseAbs().maxCoeff());
  const double mu_tol = 1e-11 * data_scale;
  const double d_tol = 1e-9 * c_scale;
  // fallback accuracy used when roundoff in the scaled Newton systems puts a
  // floor under the progress near a degenerate optimal face; the implied
  // objective error stays two orders below every decision threshold built on
  // top of this solver
  const double mu_accept = 1e-8 * data_scale;
  const double d_accept = 1e-7 * c_scale;
  const double diverge_bound = 1e9 * c_scale;

  std::vector<MatrixXd> rinv(nb), rmat(nb), gf(nb), ds(nb), dy(nb), dsa(nb),
      dya(nb), vtmp(nb);
  std::vector<VectorXd> ldiag(nb);
  int stalls = 0;

  IpmOutcome best;
  double best_score = std::numeric_limits<double>::infinity();

  for (int it = 0; it < max_iters; ++it) {
    out.iters = it + 1;

    VectorXd rd = -c;
    double gap = 0.0;
    for (int j = 0; j < nb; ++j) {
      rd -= blocks[j].F.transpose() * svec(out.y[j]);
      gap += (out.s[j].array() * out.y[j].array()).sum();
    }
    const double mu = gap / n_tot;
    out.mu = mu;
    out.dres = rd.cwiseAbs().maxCoeff();
    if (std::getenv("JM_IPM_TRACE")) {
      fprintf(stderr, "ipm it=%d mu=%.3e dres=%.3e obj=%.9f\n", it, mu,
              out.dres, c.dot(out.z));
    }
    if (mu <= mu_tol && out.dres <= d_tol) {
      out.converged = true;
      return out;
    }
    const double score = std::max(mu / mu_accept, out.dres / d_accept);
    if (score < best_score) {
      best_score = score;
      best = out;
    }
    if (std::abs(c.dot(out.z)) > diverge_bound) {
      out.diverging = true;
      return out;
    }

    // NT scaling per block: R with W = R R^T and W Y W = S; the scaled point
    // R^{-1} S R^{-T} = R^T Y R is diagonal by this construction.
    MatrixXd h = MatrixXd::Zero(nk, nk);
    bool scale_ok = true;
    for (int j = 0; j < nb; ++j) {
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(out.s[j]);
      if (es.info() != Eigen::Success || es.eigenvalues()(0) <= 0.0) {
        scale_ok = false;
        break;
      }
      const VectorXd sq = es.eigenvalues().cwiseSqrt();
      const MatrixXd s_half =
          es.eigenvectors() * sq.asDiagonal() * es.eigenvectors().transpose();
      const MatrixXd s_half_inv = es.eigenvectors() *
                                  sq.cwiseInverse().asDiagonal() *
                                  es.eigenvectors().transpose();
      Eigen::SelfAdjointEigenSolver<MatrixXd> et(s_half * out.y[j] * s_half);
      if (et.info() != Eigen::Success || et.eigenvalues()(0) <= 0.0) {
        scale_ok = false;
        break;
      }
      const VectorXd lt = et.eigenvalues();
      const VectorXd lt_q = lt.array().pow(0.25).matrix();
      rmat[j] = s_half * et.eigenvectors() * lt_q.cwiseInverse().asDiagonal();
      rinv[j] = lt_q.asDiagonal() * et.eigenvectors().transpose() * s_half_inv;
      ldiag[j] = lt.cwiseSqrt();

      gf[j].resize(svdim(blocks[j].n), nk);
      for (int k = 0; k < nk; ++k) {
        const MatrixXd fk = smat(blocks[j].F.col(k), blocks[j].n);
        const MatrixXd m = rinv[j] * fk * rinv[j].transpose();
        gf[j].col(k) = svec(rinv[j].transpose() * m * rinv[j]);
      }
      h += blocks[j].F.transpose() * gf[j];
    }
    if (!scale_ok) break;
    h = 0.5 * (h + h.transpose());

    Eigen::LDLT<MatrixXd> hfac(h);
    if (hfac.info() != Eigen::Success) {
      h.diagonal().array() += 1e-13 * (1.0 + h.diagonal().cwiseAbs().maxCoeff());
      hfac.compute(h);
      if (hfac.info() != Eigen::Success) break;
    }

    auto newton = [&](const std::vector<MatrixXd>& target, VectorXd& dz,
                      std::vector<MatrixXd>& dss, std::vector<MatrixXd>& dyy) {
      VectorXd rhs = -rd;
      for (int j = 0; j < nb; ++j) {
        const int n = blocks[j].n;
        MatrixXd scaled(n, n);
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b)
            scaled(a, b) = 2.0 * target[j](a, b) / (ldiag[j](a) + ldiag[j](b));
        vtmp[j] = rinv[j].transpose() * scaled * rinv[j];
        rhs += blocks[j].F.transpose() * svec(vtmp[j]);
      }
      dz = hfac.solve(rhs);
      for (int j = 0; j < nb; ++j) {
        dss[j] = smat(blocks[j].F * dz, blocks[j].n);
        const MatrixXd gds = rinv[j].transpose() *
                             (rinv[j] * dss[j] * rinv[j].transpose()) * rinv[j];
        dyy[j] = vtmp[j] - gds;
      }
    };

    // Predictor.
    std::vector<MatrixXd> target(nb);
    for (int j = 0; j < nb; ++j) {
      target[j] = MatrixXd::Zero(blocks[j].n, blocks[j].n);
      target[j].diagonal() = -ldiag[j].cwiseProduct(ldiag[j]);
    }
    VectorXd dz_a(nk);
    newton(target, dz_a, dsa, dya);
    double ap = 1.0, ad = 1.0;
    for (int j = 0; j < nb; ++j) {
      ap = std::min(ap, step_length(out.s[j], dsa[j]));
      ad = std::min(ad, step_length(out.y[j], dya[j]));
    }
    double gap_aff = 0.0;
    for (int j = 0; j < nb; ++j) {
      gap_aff += ((out.s[j] + ap * dsa[j]).array() *
                  (out.y[j] + ad * dya[j]).array())
                     .sum();
    }
    const double mu_aff = std::max(gap_aff / n_tot, 0.0);
    const double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 1e-10, 1.0);

    // Corrector.
    for (int j = 0; j < nb; ++j) {
      const MatrixXd ds_t = rinv[j] * dsa[j] * rinv[j].transpose();
      const MatrixXd dy_t = rmat[j].transpose() * dya[j] * rmat[j];
      target[j] -= 0.5 * (ds_t * dy_t + dy_t * ds_t);
      target[j].diagonal().array() += sigma * mu;
    }
    VectorXd dz(nk);
    newton(target, dz, ds, dy);
    ap = 1.0;
    ad = 1.0;
    for (int j = 0; j < nb; ++j) {
      ap = std::min(ap, step_length(out.s[j], ds[j]));
      ad = std::min(ad, step_length(out.y[j], dy[j]));
    }

    // near a degenerate face the combined step can collapse; a pure
    // centering step restores enough interiority to keep moving
    if (std::min(ap, ad) < 1e-2) {
      for (int j = 0; j < nb; ++j) {
        target[j] = MatrixXd::Zero(blocks[j].n, blocks[j].n);
        target[j].diagonal() =
            (-ldiag[j].cwiseProduct(ldiag[j])).array() + mu;
      }
      VectorXd dz_c(nk);
      std::vector<MatrixXd> ds_c(nb), dy_c(nb);
      newton(target, dz_c, ds_c, dy_c);
      double ap_c = 1.0, ad_c = 1.0;
      for (int j = 0; j < nb; ++j) {
        ap_c = std::min(ap_c, step_length(out.s[j], ds_c[j]));
        ad_c = std::min(ad_c, step_length(out.y[j], dy_c[j]));
      }
      if (std::min(ap_c, ad_c) > std::min(ap, ad)) {
        dz = dz_c;
        ds = ds_c;
        dy = dy_c;
        ap = ap_c;
        ad = ad_c;
      }
    }

    out.z += ap * dz;
    for (int j = 0; j < nb; ++j) {
      out.s[j] = smat(blocks[j].f0 + blocks[j].F * out.z, blocks[j].n);
      out.y[j] += ad * dy[j];
    }
    if (std::max(ap, ad) < 1e-4) {
      if (++stalls >= 3) break;
    } else {
      stalls = 0;
    }
  }
  if (std::getenv("JM_IPM_TRACE")) {
    fprintf(stderr,
            "ipm end: best_mu=%.3e best_dres=%.3e accept=(%.1e, %.1e)\n",
            best.mu, best.dres, mu_accept, d_accept);
  }
  if (best_score < std::numeric_limits<double>::infinity() &&
      best.mu <= mu_accept && best.dres <= d_accept) {
    const int iters = out.iters;
    out = best;
    out.iters = iters;
    out.converged = true;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reduced problem: coordinates w with x = x0 + N w, blocks normalized
// per block for conditioning.

struct Reduced {
  VectorXd x0;
  MatrixXd n;  // num_coords x free
  std::vector<IpmBlock> blocks;
  std::vector<double> gamma;
  std::vector<int> block_src;
};

struct EliminationResult {
  bool consistent = true;
  VectorXd x0;
  MatrixXd kernel;
};

EliminationResult eliminate(const MatrixXd& a, const VectorXd& b) {
  EliminationResult res;
  const int cols = static_cast<int>(a.cols());
  if (a.rows() == 0) {
    res.x0 = VectorXd::Zero(cols);
    res.kernel = MatrixXd::Identity(cols, cols);
    return res;
  }
  Eigen::JacobiSVD<MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeFullV);
  const VectorXd sv = svd.singularValues();
  // generous rank cutoff: rows assembled from solver-accurate eigenvectors
  // carry ~1e-9 noise, and a missed genuine constraint is caught by the
  // final residual certification while a noise row silently pins solutions
  const double tol = sv.size() > 0 ? sv(0) * 1e-8 : 0.0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > std::max(tol, 1e-13)) ++rank;
  }
  VectorXd ut_b = svd.matrixU().transpose() * b;
  VectorXd coef = VectorXd::Zero(sv.size());
  for (int i = 0; i < rank; ++i) coef(i) = ut_b(i) / sv(i);
  res.x0 = svd.matrixV().leftCols(sv.size()) * coef;
  res.kernel = svd.matrixV().rightCols(cols - rank);
  const double resid = (a * res.x0 - b).cwiseAbs().maxCoeff();
  res.consistent = resid <= 1e-8 * std::max(1.0, b.cwiseAbs().maxCoeff());
  return res;
}

Reduced build_reduced(const VecProblem& vp, const VectorXd& x0,
                      const MatrixXd& n) {
  Reduced red;
  red.x0 = x0;
  red.n = n;
  for (size_t j = 0; j < vp.blocks.size(); ++j) {
    const auto& b = vp.blocks[j];
    IpmBlock ib;
    ib.n = b.n;
    ib.f0 = b.f0 + b.F * x0;
    ib.F = b.F * n;
    double g = std::max(ib.f0.cwiseAbs().maxCoeff(), 1e-8);
    for (int k = 0; k < ib.F.cols(); ++k)
      g = std::max(g, ib.F.col(k).cwiseAbs().maxCoeff());
    ib.f0 /= g;
    ib.F /= g;
    red.blocks.push_back(std::move(ib));
    red.gamma.push_back(g);
    red.block_src.push_back(static_cast<int>(j));
  }
  return red;
}

struct Phase1Result {
  bool ok = false;
  double lambda = 0.0;
  VectorXd w;
  std::vector<MatrixXd> duals;  // per block, trailing 1x1 cap dual
  int iters = 0;
};

Phase1Result run_phase1(const std::vector<IpmBlock>& blocks, int nfree,
                        int max_iters) {
  Phase1Result res;
  const double cap = 1.0;
  std::vector<IpmBlock> ext;
  ext.reserve(blocks.size() + 1);
  for (const auto& b : blocks) {
    IpmBlock e;
    e.n = b.n;
    e.f0 = b.f0;
    e.F = MatrixXd::Zero(b.F.rows(), nfree + 1);
    e.F.leftCols(nfree) = b.F;
    e.F.col(nfree) = -svec(MatrixXd::Identity(b.n, b.n));
    ext.push_back(std::move(e));
  }
  IpmBlock capb;
  capb.n = 1;
  capb.f0 = VectorXd::Constant(1, cap);
  capb.F = MatrixXd::Zero(1, nfree + 1);
  capb.F(0, nfree) = -1.0;
  ext.push_back(std::move(capb));

  double margin = cap;
  for (const auto& b : blocks)
    margin = std::min(margin, min_eig_sym(smat(b.f0, b.n)));
  VectorXd z0 = VectorXd::Zero(nfree + 1);
  z0(nfree) = margin - 1.0;
  VectorXd c = VectorXd::Zero(nfree + 1);
  c(nfree) = 1.0;

  IpmOutcome o = run_ipm(ext, c, z0, max_iters);
  res.iters = o.iters;
  if (!o.converged) return res;
  res.ok = true;
  res.lambda = o.z(nfree);
  res.w = o.z.head(nfree);
  res.duals = o.y;
  return res;
}

Hermitian expr_value(const AffineExpr& e, const std::vector<Hermitian>& vals) {
  Hermitian acc = e.constant;
  for (const Term& t : e.terms) {
    switch (t.kind) {
      case Term::Kind::kScaled:
        acc += vals[t.var] * t.coeff;
        break;
      case Term::Kind::kScalarTimesOp:
        acc += t.op * vals[t.var].mat()(0, 0).real();
        break;
      case Term::Kind::kPairing: {
        Eigen::MatrixXcd one(1, 1);
        one(0, 0) = frobenius_inner(t.op, vals[t.var]);
        acc += Hermitian(one);
        break;
      }
      case Term::Kind::kConjugated:
        acc += Hermitian(t.conj_map * vals[t.var].mat() *
                         t.conj_map.adjoint()) *
               t.coeff;
        break;
    }
  }
  return acc;
}

std::vector<Hermitian> coords_to_values(const VecProblem& vp,
                                        const SdpProblem& p,
                                        const VectorXd& x) {
  std::vector<Hermitian> vals;
  vals.reserve(p.variables.size());
  for (size_t v = 0; v < p.variables.size(); ++v) {
    Hermitian h = Hermitian::zero(p.variables[v].second);
    const auto& basis = vp.bases[v];
    for (size_t s = 0; s < basis.elements.size(); ++s)
      h += basis.elements[s] * x(vp.offset[v] + static_cast<int>(s));
    vals.push_back(h);
  }
  return vals;
}

void finish_with_residuals(const SdpProblem& p, const VecProblem& vp,
                           const VectorXd& x, const SdpSettings& settings,
                           SdpSolution& sol) {
  sol.values = coords_to_values(vp, p, x);
  sol.eq_residual = 0.0;
  for (const auto& e : p.equalities)
    sol.eq_residual = std::max(sol.eq_residual,
                               frobenius_norm(expr_value(e, sol.values)));
  sol.psd_residual = std::numeric_limits<double>::infinity();
  for (const auto& e : p.psd)
    sol.psd_residual =
        std::min(sol.psd_residual, min_eigenvalue(expr_value(e, sol.values)));
  if (p.psd.empty()) sol.psd_residual = 0.0;

  double obj = 0.0;
  for (const auto& [var, op] : p.objective)
    obj += frobenius_inner(op, sol.values[var]);
  sol.objective_value = obj;

  if (sol.eq_residual > settings.eps_eq ||
      sol.psd_residual < -settings.eps_psd) {
    sol.status = SdpStatus::kNumericalFailure;
    std::ostringstream msg;
    msg << "residual targets unmet: eq=" << sol.eq_residual
        << " psd=" << sol.psd_residual;
    sol.message = msg.str();
  } else {
    sol.status = SdpStatus::kOptimal;
  }
}

// Maps phase-1 duals of the round-0 normalized blocks back to complex
// Hermitian multipliers and normalizes to unit total trace.
void build_certificate(const VecProblem& vp, const Reduced& red,
                       const Phase1Result& ph, SdpSolution& sol) {
  const size_t nb = red.blocks.size();
  std::vector<Hermitian> ys;
  double total_trace = 0.0;
  for (size_t j = 0; j < nb; ++j) {
    Hermitian yc = from_real_embedding(ph.duals[j] / red.gamma[j]);
    total_trace += yc.mat().trace().real();
    ys.push_back(yc);
  }
  if (total_trace <= 1e-14) {
    sol.status = SdpStatus::kNumericalFailure;
    sol.message = "infeasibility suspected but certificate degenerate";
    return;
  }
  for (auto& y : ys) y = y * (1.0 / total_trace);

  // Leak along equality-feasible directions and the value against the
  // constraint constants; embedded pairings double the complex ones.
  VectorXd g = VectorXd::Zero(vp.num_coords);
  double value = 0.0;
  for (size_t j = 0; j < nb; ++j) {
    const auto& b = vp.blocks[j];
    const VectorXd ysv = svec(real_embedding(ys[j]));
    g += 0.5 * (b.F.transpose() * ysv);
    value += 0.5 * ysv.dot(b.f0 + b.F * red.x0);
  }
  sol.ray = std::move(ys);
  sol.ray_pairing_residual =
      red.n.cols() > 0 ? (red.n.transpose() * g).cwiseAbs().maxCoeff() : 0.0;
  sol.ray_objective = value;
  sol.status = SdpStatus::kInfeasible;
  sol.message = "dual improving ray certificate";
}

struct FacialRound {
  bool progressed = false;
  MatrixXd extra_rows;
  VectorXd extra_rhs;
  std::vector<IpmBlock> kept_blocks;
  std::vector<double> kept_gamma;
  std::vector<int> kept_src;
};

FacialRound facial_reduce(const Reduced& red, const VectorXd& w) {
  FacialRound fr;
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rhs;
  const int nfree = static_cast<int>(red.n.cols());

  for (size_t j = 0; j < red.blocks.size(); ++j) {
    const auto& b = red.blocks[j];
    const MatrixXd s = smat(b.f0 + b.F * w, b.n);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(s);
    const VectorXd ev = es.eigenvalues();
    const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    std::vector<int> keep, drop;
    for (int i = 0; i < ev.size(); ++i) {
      if (ev(i) > 1e-6 * scale) keep.push_back(i);
      else drop.push_back(i);
    }
    if (drop.empty()) {
      fr.kept_blocks.push_back(b);
      fr.kept_gamma.push_back(red.gamma[j]);
      fr.kept_src.push_back(red.block_src[j]);
      continue;
    }
    fr.progressed = true;
    MatrixXd u(b.n, static_cast<int>(drop.size()));
    MatrixXd v(b.n, static_cast<int>(keep.size()));
    for (size_t i = 0; i < drop.size(); ++i)
      u.col(static_cast<int>(i)) = es.eigenvectors().col(drop[i]);
    for (size_t i = 0; i < keep.size(); ++i)
      v.col(static_cast<int>(i)) = es.eigenvectors().col(keep[i]);

    // On the face every feasible point satisfies u^T G u = 0 and u^T G v = 0.
    auto push_row = [&](const VectorXd& ua, const VectorXd& ub) {
      Eigen::VectorXd row(nfree);
      for (int k = 0; k < nfree; ++k) {
        const MatrixXd fk = smat(b.F.col(k), b.n);
        row(k) = ua.dot(fk * ub);
      }
      rows.push_back(row);
      rhs.push_back(-ua.dot(smat(b.f0, b.n) * ub));
    };
    for (int a = 0; a < u.cols(); ++a)
      for (int c2 = a; c2 < u.cols(); ++c2) push_row(u.col(a), u.col(c2));
    for (int a = 0; a < u.cols(); ++a)
      for (int c2 = 0; c2 < v.cols(); ++c2) push_row(u.col(a), v.col(c2));

    if (!keep.empty()) {
      IpmBlock cb;
      cb.n = static_cast<int>(keep.size());
      cb.f0 = svec((v.transpose() * smat(b.f0, b.n) * v).eval());
      cb.F = MatrixXd::Zero(svdim(cb.n), nfree);
      for (int k = 0; k < nfree; ++k) {
        const MatrixXd fk = smat(b.F.col(k), b.n);
        cb.F.col(k) = svec((v.transpose() * fk * v).eval());
      }
      fr.kept_blocks.push_back(std::move(cb));
      fr.kept_gamma.push_back(red.gamma[j]);
      fr.kept_src.push_back(red.block_src[j]);
    }
  }
  fr.extra_rows = MatrixXd::Zero(static_cast<int>(rows.size()), nfree);
  fr.extra_rhs = VectorXd::Zero(static_cast<int>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    fr.extra_rows.row(static_cast<int>(i)) = rows[i].transpose();
    fr.extra_rhs(static_cast<int>(i)) = rhs[i];
  }
  return fr;
}

std::mutex g_dump_mutex;
std::string g_dump_path;

void maybe_dump(const SdpProblem& p, const SdpSettings& settings) {
  std::string path = settings.dump_path;
  {
    std::lock_guard<std::mutex> lock(g_dump_mutex);
    if (path.empty()) path = g_dump_path;
  }
  if (path.empty()) return;
  std::lock_guard<std::mutex> lock(g_dump_mutex);
  std::ofstream os(path, std::ios::app);
  if (os) dump_problem(p, os);
}

std::string matrix_json(const Hermitian& h) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < h.dim(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < h.dim(); ++j) {
      row.push_back({h.mat()(i, j).real(), h.mat()(i, j).imag()});
    }
    rows.push_back(row);
  }
  return rows.dump();
}

void dump_expr(const SdpProblem& p, const AffineExpr& e, std::ostream& os) {
  for (const Term& t : e.terms) {
    switch (t.kind) {
      case Term::Kind::kScaled:
        os << " + " << t.coeff << "*" << p.variables[t.var].first;
        break;
      case Term::Kind::kScalarTimesOp:
        os << " + " << p.variables[t.var].first << "*" << matrix_json(t.op);
        break;
      case Term::Kind::kPairing:
        os << " + tr(" << matrix_json(t.op) << "*" << p.variables[t.var].first
           << ")";
        break;
      case Term::Kind::kConjugated:
        os << " + " << t.coeff << "*conj[" << t.conj_map.rows() << "x"
           << t.conj_map.cols() << "](" << p.variables[t.var].first << ")";
        break;
    }
  }
  os << " + " << matrix_json(e.constant);
}

}  // namespace

// ---------------------------------------------------------------------------
// Builders.

AffineExpr AffineExpr::zero(int dim) {
  AffineExpr e;
  e.dim = dim;
  e.constant = Hermitian::zero(dim);
  return e;
}

AffineExpr& AffineExpr::add_scaled(int var, double coeff) {
  terms.push_back({Term::Kind::kScaled, var, coeff, Hermitian(), {}});
  return *this;
}

AffineExpr& AffineExpr::add_scalar_times_op(int var, const Hermitian& op) {
  terms.push_back({Term::Kind::kScalarTimesOp, var, 1.0, op, {}});
  return *this;
}

AffineExpr& AffineExpr::add_pairing(int var, const Hermitian& op) {
  terms.push_back({Term::Kind::kPairing, var, 1.0, op, {}});
  return *this;
}

AffineExpr& AffineExpr::add_conjugated(int var, const Eigen::MatrixXcd& v,
                                       double coeff) {
  terms.push_back({Term::Kind::kConjugated, var, coeff, Hermitian(), v});
  return *this;
}

AffineExpr& AffineExpr::add_constant(const Hermitian& c) {
  constant = constant.dim() == 0 ? c : constant + c;
  return *this;
}

int SdpProblem::add_variable(const std::string& name, int dim) {
  variables.emplace_back(name, dim);
  return static_cast<int>(variables.size()) - 1;
}

std::string to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::kOptimal: return "optimal";
    case SdpStatus::kInfeasible: return "infeasible";
    case SdpStatus::kUnbounded: return "unbounded";
    case SdpStatus::kNumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

SdpSolution solve_sdp(const SdpProblem& problem, const SdpSettings& settings) {
  check_problem(problem);
  maybe_dump(problem, settings);

  SdpSolution sol;
  VecProblem vp = vectorize(problem);

  EliminationResult elim = eliminate(vp.eq_a, vp.eq_b);
  if (!elim.consistent) {
    sol.status = SdpStatus::kInfeasible;
    sol.message = "equality constraints are inconsistent as a linear system";
    return sol;
  }

  int total_iters = 0;
  Reduced red = build_reduced(vp, elim.x0, elim.kernel);
  std::optional<Phase1Result> interior;
  const int kFacialRounds = 4;

  for (int round = 0;; ++round) {
    const int nfree = static_cast<int>(red.n.cols());

    if (red.blocks.empty()) {
      const VectorXd c_red = red.n.transpose() * vp.c;
      if (c_red.size() > 0 && c_red.cwiseAbs().maxCoeff() > 1e-12) {
        sol.status = SdpStatus::kUnbounded;
        sol.message = "objective unbounded: no PSD constraint binds";
        sol.iterations = total_iters;
        return sol;
      }
      finish_with_residuals(problem, vp, red.x0, settings, sol);
      sol.iterations = total_iters;
      return sol;
    }

    if (nfree == 0) {
      // Fully pinned by equalities: feasibility is a direct spectral check.
      double worst = std::numeric_limits<double>::infinity();
      int worst_j = 0;
      for (size_t j = 0; j < vp.blocks.size(); ++j) {
        const double me = min_eig_sym(
            smat(vp.blocks[j].f0 + vp.blocks[j].F * red.x0, vp.blocks[j].n));
        if (me < worst) {
          worst = me;
          worst_j = static_cast<int>(j);
        }
      }
      if (worst < -settings.eps_psd) {
        const auto& b = vp.blocks[worst_j];
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(
            smat(b.f0 + b.F * red.x0, b.n));
        MatrixXd proj = MatrixXd::Zero(b.n, b.n);
        double neg_sum = 0.0;
        for (int i = 0; i < es.eigenvalues().size(); ++i) {
          if (es.eigenvalues()(i) < 0) {
            proj += es.eigenvectors().col(i) * es.eigenvectors().col(i).transpose();
            neg_sum += es.eigenvalues()(i);
          }
        }
        sol.ray.clear();
        for (const auto& e : problem.psd) sol.ray.push_back(Hermitian::zero(e.dim));
        Hermitian yc = from_real_embedding(proj);
        const double t = yc.mat().trace().real();
        sol.ray[worst_j] = yc * (1.0 / t);
        sol.ray_objective = 0.5 * neg_sum / t;
        sol.ray_pairing_residual = 0.0;
        sol.status = SdpStatus::kInfeasible;
        sol.message = "variables pinned by equalities; PSD constraint violated";
        sol.iterations = total_iters;
        return sol;
      }
      finish_with_residuals(problem, vp, red.x0, settings, sol);
      sol.iterations = total_iters;
      return sol;
    }

    Phase1Result ph = run_phase1(red.blocks, nfree, settings.max_iters);
    total_iters += ph.iters;
    if (!ph.ok) {
      sol.status = SdpStatus::kNumericalFailure;
      sol.message = "phase-1 interior point did not converge";
      sol.iterations = total_iters;
      return sol;
    }

    if (ph.lambda < -1e-7) {
      if (round == 0) {
        build_certificate(vp, red, ph, sol);
      } else {
        sol.status = SdpStatus::kNumericalFailure;
        sol.message = "facial reduction reached an infeasible face";
      }
      sol.iterations = total_iters;
      return sol;
    }

    if (ph.lambda > 1e-7) {
      interior = std::move(ph);
      break;
    }

    FacialRound fr = facial_reduce(red, ph.w);
    if (!fr.progressed) {
      interior = std::move(ph);
      break;
    }
    if (round >= kFacialRounds) {
      sol.status = SdpStatus::kNumericalFailure;
      sol.message = "facial reduction did not reach a relatively interior face";
      sol.iterations = total_iters;
      return sol;
    }
    EliminationResult sub = eliminate(fr.extra_rows, fr.extra_rhs);
    if (!sub.consistent) {
      sol.status = SdpStatus::kNumericalFailure;
      sol.message = "facial reduction produced inconsistent constraints";
      sol.iterations = total_iters;
      return sol;
    }
    Reduced next;
    next.x0 = red.x0 + red.n * sub.x0;
    next.n = red.n * sub.kernel;
    for (size_t j = 0; j < fr.kept_blocks.size(); ++j) {
      IpmBlock b;
      b.n = fr.kept_blocks[j].n;
      b.f0 = fr.kept_blocks[j].f0 + fr.kept_blocks[j].F * sub.x0;
      b.F = fr.kept_blocks[j].F * sub.kernel;
      next.blocks.push_back(std::move(b));
      next.gamma.push_back(fr.kept_gamma[j]);
      next.block_src.push_back(fr.kept_src[j]);
    }
    red = std::move(next);
  }

  const VectorXd c_red = red.n.transpose() * vp.c;
  VectorXd w_final = interior->w;

  if (c_red.size() > 0 && c_red.cwiseAbs().maxCoeff() > 1e-12) {
    IpmOutcome o = run_ipm(red.blocks, c_red, interior->w, settings.max_iters);
    total_iters += o.iters;
    if (o.diverging) {
      // Certify by a strictly feasible homogeneous improving direction.
      MatrixXd crow = c_red.transpose();
      VectorXd one = VectorXd::Constant(1, 1.0);
      EliminationResult unit = eliminate(crow, one);
      std::vector<IpmBlock> hom;
      for (const auto& b : red.blocks) {
        IpmBlock hb;
        hb.n = b.n;
        hb.f0 = b.F * unit.x0;
        hb.F = b.F * unit.kernel;
        hom.push_back(std::move(hb));
      }
      Phase1Result ray = run_phase1(hom, static_cast<int>(unit.kernel.cols()),
                                    settings.max_iters);
      total_iters += ray.iters;
      if (ray.ok && ray.lambda > 1e-7) {
        sol.status = SdpStatus::kUnbounded;
        sol.message = "objective unbounded along a feasible ray";
        const VectorXd dir = red.n * (unit.x0 + unit.kernel * ray.w);
        sol.values = coords_to_values(vp, problem, dir);
      } else {
        sol.status = SdpStatus::kNumericalFailure;
        sol.message = "objective diverged without a certified ray";
      }
      sol.iterations = total_iters;
      return sol;
    }
    if (!o.converged) {
      sol.status = SdpStatus::kNumericalFailure;
      sol.message = "optimizing interior point did not converge";
      sol.iterations = total_iters;
      return sol;
    }
    w_final = o.z;
  }

  finish_with_residuals(problem, vp, red.x0 + red.n * w_final, settings, sol);
  sol.iterations = total_iters;
  return sol;
}

void dump_problem(const SdpProblem& p, std::ostream& os) {
  os << "sdp " << (p.maximize ? "maximize" : "minimize") << "\n";
  for (const auto& [name, dim] : p.variables)
    os << "var " << name << " herm " << dim << "\n";
  os << "objective:";
  for (const auto& [var, op] : p.objective)
    os << " + tr(" << matrix_json(op) << "*" << p.variables[var].first << ")";
  os << "\n";
  for (size_t i = 0; i < p.equalities.size(); ++i) {
    os << "eq[" << i << "]:";
    dump_expr(p, p.equalities[i], os);
    os << " == 0\n";
  }
  for (size_t i = 0; i < p.psd.size(); ++i) {
    os << "psd[" << i << "]:";
    dump_expr(p, p.psd[i], os);
    os << " >= 0\n";
  }
  os << "end\n";
}

void set_default_dump_path(const std::string& path) {
  std::lock_guard<std::mutex> lock(g_dump_mutex);
  g_dump_path = path;
}

}  // namespace jm::conic
