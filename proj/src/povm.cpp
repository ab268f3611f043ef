#include "jm/povm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace jm {

namespace {

std::string describe(const std::vector<Violation>& vs) {
  std::ostringstream os;
  os << "invalid POVM:";
  for (const auto& v : vs) {
    os << " [" << v.what;
    if (v.effect >= 0) os << " at effect " << v.effect;
    os << ", residual " << v.residual << "]";
  }
  return os.str();
}

}  // namespace

Povm::Povm(std::vector<Hermitian> effects, double tol) {
  PovmValidation val = validate_povm(effects, tol);
  if (!val.ok()) throw std::invalid_argument(describe(val.violations));
  effects_ = std::move(effects);
}

PovmValidation validate_povm(const std::vector<Hermitian>& effects,
                             double tol) {
  PovmValidation out;
  if (effects.empty()) {
    out.violations.push_back({"empty effect sequence", -1, 0.0});
    return out;
  }
  const int d = effects[0].dim();
  for (size_t i = 0; i < effects.size(); ++i) {
    if (effects[i].dim() != d) {
      out.violations.push_back({"dimension mismatch", static_cast<int>(i), 0.0});
      return out;
    }
  }
  for (size_t i = 0; i < effects.size(); ++i) {
    const double me = min_eigenvalue(effects[i]);
    if (me < -tol) {
      out.violations.push_back({"effect not PSD", static_cast<int>(i), me});
    }
  }
  Hermitian sum = Hermitian::zero(d);
  for (const auto& e : effects) sum += e;
  const double norm_residual = frobenius_norm(sum - Hermitian::identity(d));
  if (norm_residual > kEpsEq) {
    out.violations.push_back({"effects do not sum to identity", -1, norm_residual});
  }
  if (out.violations.empty()) {
    Povm p;
    p.effects_ = effects;
    out.povm = std::move(p);
  }
  return out;
}

MeasurementTuple::MeasurementTuple(std::vector<Povm> measurements)
    : measurements_(std::move(measurements)) {
  if (measurements_.empty()) {
    throw std::invalid_argument("MeasurementTuple: m >= 1");
  }
  const int d = measurements_[0].dim();
  for (const auto& m : measurements_) {
    if (m.dim() != d) {
      throw std::invalid_argument("MeasurementTuple: shared dimension required");
    }
  }
}

Perturbation::Perturbation(std::vector<Hermitian> blocks, double tol)
    : blocks_(std::move(blocks)) {
  if (blocks_.empty()) throw std::invalid_argument("Perturbation: empty");
  const int d = blocks_[0].dim();
  Hermitian sum = Hermitian::zero(d);
  for (const auto& b : blocks_) {
    if (b.dim() != d) throw std::invalid_argument("Perturbation: dimension mismatch");
    sum += b;
  }
  const double res = jm::frobenius_norm(sum);
  if (res > tol) {
    throw std::invalid_argument("Perturbation: blocks do not sum to zero, residual " +
                                std::to_string(res));
  }
}

double frobenius_norm(const Perturbation& d) {
  double sq = 0.0;
  for (const auto& b : d.blocks()) sq += frobenius_norm(b) * frobenius_norm(b);
  return std::sqrt(sq);
}

Povm depolarize(const Povm& a, double t, bool allow_t_above_one) {
  if (t < 0.0 || (!allow_t_above_one && t > 1.0)) {
    throw std::invalid_argument("depolarize: t must lie in [0, 1]");
  }
  const int d = a.dim();
  std::vector<Hermitian> effects;
  effects.reserve(a.n_outcomes());
  for (const auto& e : a.effects()) {
    const double tr = e.mat().trace().real();
    effects.push_back(e * t + Hermitian::identity(d) * ((1.0 - t) * tr / d));
  }
  return Povm(std::move(effects));  // re-validates, matters for t > 1
}

MeasurementTuple depolarize(const MeasurementTuple& t, double visibility,
                            bool allow_t_above_one) {
  std::vector<Povm> ms;
  ms.reserve(t.size());
  for (const auto& m : t.measurements())
    ms.push_back(depolarize(m, visibility, allow_t_above_one));
  return MeasurementTuple(std::move(ms));
}

std::pair<Povm, Perturbation> trivial_counterpart(const Povm& a) {
  const int d = a.dim();
  std::vector<Hermitian> trivial, diff;
  trivial.reserve(a.n_outcomes());
  diff.reserve(a.n_outcomes());
  for (const auto& e : a.effects()) {
    const double tr = e.mat().trace().real();
    trivial.push_back(Hermitian::identity(d) * (tr / d));
    diff.push_back(trivial.back() - e);
  }
  return {Povm(std::move(trivial)), Perturbation(std::move(diff))};
}

bool is_projective(const Povm& a, double tol) {
  for (const auto& e : a.effects()) {
    const Hermitian sq(e.mat() * e.mat());
    if (frobenius_norm(sq - e) > tol) return false;
  }
  return true;
}

ExtremalityResult is_extremal_povm(const Povm& a, double tol) {
  const int d = a.dim();
  const int n = a.n_outcomes();

  std::vector<Eigen::MatrixXcd> supports;
  std::vector<HermitianBasis> small_bases;
  int total_coords = 0;
  for (int i = 0; i < n; ++i) {
    supports.push_back(support_basis(a.effect(i), tol));
    const int r = static_cast<int>(supports.back().cols());
    small_bases.push_back(r > 0 ? hermitian_basis(r) : HermitianBasis{});
    total_coords += r * r;
  }

  ExtremalityResult res;
  if (total_coords == 0) {
    res.extremal = true;  // all effects null cannot occur for a valid POVM
    return res;
  }

  // Null space of the summation map restricted to support-compressed blocks.
  const HermitianBasis full = hermitian_basis(d);
  Eigen::MatrixXd q(d * d, total_coords);
  std::vector<std::pair<int, int>> col_origin;  // (effect, small basis index)
  int col = 0;
  for (int i = 0; i < n; ++i) {
    const int r = static_cast<int>(supports[i].cols());
    for (int s = 0; s < r * r; ++s) {
      const Hermitian lifted(supports[i] * small_bases[i].elements[s].mat() *
                             supports[i].adjoint());
      for (int f = 0; f < d * d; ++f) {
        q(f, col) = frobenius_inner(full.elements[f], lifted);
      }
      col_origin.emplace_back(i, s);
      ++col;
    }
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(q, Eigen::ComputeFullV);
  const Eigen::VectorXd sv = svd.singularValues();
  const double cutoff = sv.size() > 0 ? 1e-9 * sv(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > std::max(cutoff, 1e-14)) ++rank;
  }
  if (rank == total_coords) {
    res.extremal = true;
    return res;
  }

  // Deterministic witness: the null direction of smallest singular value,
  // sign-fixed on its first significant coordinate.
  Eigen::VectorXd v = svd.matrixV().col(total_coords - 1);
  for (int i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-9) {
      if (v(i) < 0) v = -v;
      break;
    }
  }

  std::vector<Hermitian> blocks(n, Hermitian::zero(d));
  for (int c = 0; c < total_coords; ++c) {
    const auto& [i, s] = col_origin[c];
    blocks[i] += Hermitian(supports[i] * small_bases[i].elements[s].mat() *
                           supports[i].adjoint()) *
                 v(c);
  }

  // Scale so the tightest of the constraints A_i +/- beta D_i >= 0 has
  // margin exactly zero; on each support beta is 1/rho of the compressed
  // pencil.
  double beta = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const int r = static_cast<int>(supports[i].cols());
    if (r == 0) continue;
    const Eigen::MatrixXcd s_small =
        supports[i].adjoint() * a.effect(i).mat() * supports[i];
    const Eigen::MatrixXcd d_small =
        supports[i].adjoint() * blocks[i].mat() * supports[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(s_small);
    const Eigen::VectorXd ev = es.eigenvalues();
    const Eigen::MatrixXcd isq = es.eigenvectors() *
                                 ev.cwiseSqrt().cwiseInverse().asDiagonal() *
                                 es.eigenvectors().adjoint();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> et(isq * d_small * isq);
    const double rho = et.eigenvalues().cwiseAbs().maxCoeff();
    if (rho > 1e-14) beta = std::min(beta, 1.0 / rho);
  }
  if (!std::isfinite(beta)) beta = 1.0;

  for (auto& b : blocks) b = b * beta;
  res.extremal = false;
  res.witness = Perturbation(std::move(blocks));
  return res;
}

bool is_boundary_povm(const Povm& a, double tol) {
  for (const auto& e : a.effects()) {
    if (support_rank(e, tol) < a.dim()) return true;
  }
  return false;
}

bool tuple_is_extremal(const MeasurementTuple& t, double tol) {
  return std::all_of(t.measurements().begin(), t.measurements().end(),
                     [&](const Povm& a) { return is_extremal_povm(a, tol).extremal; });
}

bool tuple_is_boundary(const MeasurementTuple& t, double tol) {
  return std::any_of(t.measurements().begin(), t.measurements().end(),
                     [&](const Povm& a) { return is_boundary_povm(a, tol); });
}

Povm relabel(const Povm& a, const std::vector<int>& perm) {
  const int n = a.n_outcomes();
  if (static_cast<int>(perm.size()) != n) {
    throw std::invalid_argument("relabel: permutation size mismatch");
  }
  std::vector<bool> seen(n, false);
  for (int p : perm) {
    if (p < 0 || p >= n || seen[p]) {
      throw std::invalid_argument("relabel: not a bijection on outcomes");
    }
    seen[p] = true;
  }
  std::vector<Hermitian> effects(n);
  for (int i = 0; i < n; ++i) effects[perm[i]] = a.effect(i);
  return Povm(std::move(effects));
}

}  // namespace jm
