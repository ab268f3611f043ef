#include "jm/unique.hpp"

#include <cmath>
#include <sstream>

#include "jm/conic.hpp"

namespace jm {

namespace {

// Largest alpha in [0, cap] with every M_b + alpha * D_b PSD; the minimum
// eigenvalue is concave in alpha, so bisection is exact enough.
double max_feasible_scale(const JointMeasurement& m,
                          const std::vector<Hermitian>& d, double cap) {
  auto margin = [&](double alpha) {
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m.n_effects(); ++i) {
      worst = std::min(worst, min_eigenvalue(m.effect(i) + d[i] * alpha));
    }
    return worst;
  };
  double lo = 0.0;
  double hi = cap;
  if (margin(hi) >= -1e-14) return hi;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (margin(mid) >= -1e-14) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

std::vector<Hermitian> scaled_blocks(const std::vector<Hermitian>& d,
                                     double s) {
  std::vector<Hermitian> out;
  out.reserve(d.size());
  for (const auto& b : d) out.push_back(b * s);
  return out;
}

// Support bases of a relatively interior joint measurement: every joint for
// the same tuple has its effects supported inside these subspaces, so the
// perturbation programs can be compressed onto them exactly. This is what
// keeps the sweep optima sharp when the joint set has empty interior in the
// ambient space.
struct FaceBasis {
  std::vector<Eigen::MatrixXcd> v;  // per cell, d x r_b (r_b may be 0)
};

FaceBasis face_of(const JointMeasurement& rel_interior) {
  FaceBasis face;
  face.v.reserve(rel_interior.n_effects());
  for (int i = 0; i < rel_interior.n_effects(); ++i) {
    face.v.push_back(support_basis(rel_interior.effect(i), 1e-7));
  }
  return face;
}

struct SweepOutcome {
  std::optional<MarginalPerturbation> direction;
  double max_objective = 0.0;
};

// The full (cell, basis element, sign) sweep: maximize +/- tr(D_a lambda)
// over marginal-preserving perturbations of M, with D compressed onto the
// face and optional orthogonality constraints against collected directions.
SweepOutcome sweep_marginal_perturbations(
    const JointMeasurement& m, const FaceBasis& face,
    const std::vector<MarginalPerturbation>& orthogonal_to) {
  const auto& counts = m.outcome_counts();
  const int cells = m.n_effects();
  const int d = m.dim();

  conic::SdpProblem p;
  std::vector<int> vars(cells, -1);
  for (int flat = 0; flat < cells; ++flat) {
    const int r = static_cast<int>(face.v[flat].cols());
    if (r == 0) continue;  // cell pinned to zero on the face
    std::string name = "X";
    for (int a : JointMeasurement::multi_index(counts, flat))
      name += "_" + std::to_string(a + 1);
    vars[flat] = p.add_variable(name, r);
    conic::AffineExpr psd = conic::AffineExpr::zero(r);
    psd.add_constant(Hermitian(face.v[flat].adjoint() * m.effect(flat).mat() *
                               face.v[flat]));
    psd.add_scaled(vars[flat], 1.0);
    p.require_psd(std::move(psd));
  }
  for (size_t j = 0; j < counts.size(); ++j) {
    for (int i = 0; i < counts[j]; ++i) {
      conic::AffineExpr e = conic::AffineExpr::zero(d);
      for (int flat = 0; flat < cells; ++flat) {
        if (vars[flat] < 0) continue;
        if (JointMeasurement::multi_index(counts, flat)[static_cast<int>(j)] ==
            i) {
          e.add_conjugated(vars[flat], face.v[flat]);
        }
      }
      p.require_zero(std::move(e));
    }
  }
  for (const auto& u : orthogonal_to) {
    conic::AffineExpr e = conic::AffineExpr::zero(1);
    for (int flat = 0; flat < cells; ++flat) {
      if (vars[flat] < 0) continue;
      e.add_pairing(vars[flat],
                    Hermitian(face.v[flat].adjoint() * u.block(flat).mat() *
                              face.v[flat]));
    }
    p.require_zero(std::move(e));
  }

  const HermitianBasis basis = hermitian_basis(d);
  SweepOutcome out;
  for (int flat = 0; flat < cells; ++flat) {
    if (vars[flat] < 0) continue;  // objective identically zero off the face
    for (size_t b = 0; b < basis.elements.size(); ++b) {
      const Hermitian compressed(face.v[flat].adjoint() *
                                 basis.elements[b].mat() * face.v[flat]);
      if (frobenius_norm(compressed) < 1e-14) continue;
      for (int sign : {+1, -1}) {
        p.objective.clear();
        p.objective.emplace_back(vars[flat],
                                 compressed * static_cast<double>(sign));
        p.maximize = true;
        const conic::SdpSolution sol = conic::solve_sdp(p);
        if (sol.status != conic::SdpStatus::kOptimal) {
          std::ostringstream os;
          os << "perturbation sweep failed at cell (";
          const auto multi = JointMeasurement::multi_index(counts, flat);
          for (size_t k = 0; k < multi.size(); ++k)
            os << (k ? "," : "") << multi[k] + 1;
          os << "), basis " << b << ", sign " << (sign > 0 ? "+" : "-") << ": "
             << conic::to_string(sol.status);
          throw SolverFailure(os.str());
        }
        out.max_objective = std::max(out.max_objective, sol.objective_value);
        if (sol.objective_value > kEpsUnique) {
          std::vector<Hermitian> blocks(cells, Hermitian::zero(d));
          for (int f = 0; f < cells; ++f) {
            if (vars[f] < 0) continue;
            blocks[f] = Hermitian(face.v[f] * sol.values[vars[f]].mat() *
                                  face.v[f].adjoint());
          }
          // polish: shrink to exact joint validity if the solver left a
          // slightly negative eigenvalue
          const double gamma = max_feasible_scale(m, blocks, 1.0);
          out.direction =
              MarginalPerturbation(counts, scaled_blocks(blocks, gamma));
          return out;
        }
      }
    }
  }
  return out;
}

// Null space of the marginal map restricted to support-compressed blocks,
// optionally orthogonal to previously found directions.
std::optional<MarginalPerturbation> compressed_null_direction(
    const JointMeasurement& m,
    const std::vector<MarginalPerturbation>& orthogonal_to) {
  const auto& counts = m.outcome_counts();
  const int cells = m.n_effects();
  const int d = m.dim();

  std::vector<Eigen::MatrixXcd> supports;
  std::vector<HermitianBasis> small;
  int total = 0;
  for (int flat = 0; flat < cells; ++flat) {
    supports.push_back(support_basis(m.effect(flat)));
    const int r = static_cast<int>(supports.back().cols());
    small.push_back(r > 0 ? hermitian_basis(r) : HermitianBasis{});
    total += r * r;
  }
  if (total == 0) return std::nullopt;

  auto lifted = [&](int flat, int s) {
    return Hermitian(supports[flat] * small[flat].elements[s].mat() *
                     supports[flat].adjoint());
  };

  const HermitianBasis full = hermitian_basis(d);
  int marginal_rows = 0;
  for (int c : counts) marginal_rows += c * d * d;
  const int rows = marginal_rows + static_cast<int>(orthogonal_to.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, total);
  int col = 0;
  for (int flat = 0; flat < cells; ++flat) {
    const auto multi = JointMeasurement::multi_index(counts, flat);
    const int r = static_cast<int>(supports[flat].cols());
    for (int s = 0; s < r * r; ++s) {
      const Hermitian op = lifted(flat, s);
      int row = 0;
      for (size_t j = 0; j < counts.size(); ++j) {
        for (int i = 0; i < counts[j]; ++i) {
          if (multi[j] == i) {
            for (int f = 0; f < d * d; ++f)
              a(row + f, col) = frobenius_inner(full.elements[f], op);
          }
          row += d * d;
        }
      }
      for (size_t u = 0; u < orthogonal_to.size(); ++u) {
        a(marginal_rows + static_cast<int>(u), col) =
            frobenius_inner(orthogonal_to[u].block(flat), op);
      }
      ++col;
    }
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd sv = svd.singularValues();
  const double cutoff = sv.size() > 0 ? 1e-9 * sv(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > std::max(cutoff, 1e-14)) ++rank;
  }
  if (rank == total) return std::nullopt;

  Eigen::VectorXd v = svd.matrixV().col(total - 1);
  for (int i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-9) {
      if (v(i) < 0) v = -v;
      break;
    }
  }
  std::vector<Hermitian> blocks(cells, Hermitian::zero(d));
  col = 0;
  for (int flat = 0; flat < cells; ++flat) {
    const int r = static_cast<int>(supports[flat].cols());
    for (int s = 0; s < r * r; ++s) blocks[flat] += lifted(flat, s) * v(col++);
  }

  // scale to the tightest two-sided feasibility margin
  std::vector<Hermitian> negated;
  for (const auto& b : blocks) negated.push_back(-b);
  const double beta = std::min(max_feasible_scale(m, blocks, 1e6),
                               max_feasible_scale(m, negated, 1e6));
  if (beta < 1e-9) return std::nullopt;  // support estimate was too generous
  return MarginalPerturbation(counts, scaled_blocks(blocks, beta));
}

MeasurementTuple marginal_tuple(const JointMeasurement& m) {
  std::vector<Povm> ms;
  ms.reserve(m.parties());
  for (int j = 0; j < m.parties(); ++j) ms.push_back(marginal(m, j));
  return MeasurementTuple(std::move(ms));
}

}  // namespace

std::optional<MarginalPerturbation> symmetric_perturbation_precheck(
    const JointMeasurement& m) {
  return compressed_null_direction(m, {});
}

std::optional<MarginalPerturbation> find_marginal_perturbation(
    const JointMeasurement& m, bool use_precheck) {
  if (use_precheck) {
    auto quick = symmetric_perturbation_precheck(m);
    // an under-sized two-sided margin is not a trustworthy witness
    if (quick.has_value() && frobenius_norm(*quick) >= kEpsUnique) return quick;
  }
  // the compression face comes from a relatively interior joint for the
  // same marginals, which may strictly contain support(M)
  const JointMeasurement rel = max_min_eig_joint(marginal_tuple(m)).joint;
  return sweep_marginal_perturbations(m, face_of(rel), {}).direction;
}

UniquenessVerdict joint_uniqueness(const MeasurementTuple& t) {
  // the min-eigenvalue-maximizing joint keeps feasible directions largest
  const JointMeasurement base = max_min_eig_joint(t).joint;

  UniquenessVerdict out;
  auto quick = symmetric_perturbation_precheck(base);
  if (quick.has_value() && frobenius_norm(*quick) >= kEpsUnique) {
    out.verdict = Verdict::kNonUnique;
    out.second_joint = add_perturbation(base, *quick);
    out.max_objective_seen = frobenius_norm(*quick);
    out.witness = std::move(quick);
    return out;
  }
  SweepOutcome sw = sweep_marginal_perturbations(base, face_of(base), {});
  out.max_objective_seen = sw.max_objective;
  if (sw.direction.has_value()) {
    out.verdict = Verdict::kNonUnique;
    out.second_joint = add_perturbation(base, *sw.direction);
    out.witness = std::move(sw.direction);
  } else {
    out.verdict = Verdict::kUnique;
  }
  return out;
}

int joint_set_affine_dimension(const MeasurementTuple& t) {
  JointMeasurement center = max_min_eig_joint(t).joint;
  const FaceBasis face = face_of(center);
  std::vector<MarginalPerturbation> directions;
  const int cap = 1000;

  while (static_cast<int>(directions.size()) < cap) {
    std::optional<MarginalPerturbation> dir =
        compressed_null_direction(center, directions);
    if (!dir.has_value() || frobenius_norm(*dir) < kEpsUnique) {
      dir = sweep_marginal_perturbations(center, face, directions).direction;
    }
    if (!dir.has_value()) {
      return static_cast<int>(directions.size());
    }

    const double norm = frobenius_norm(*dir);
    std::vector<Hermitian> unit = scaled_blocks(dir->blocks(), 1.0 / norm);
    std::vector<Hermitian> unit_neg;
    for (const auto& b : unit) unit_neg.push_back(-b);

    // recenter at the midpoint of the extreme steps along the direction
    const double ahead = max_feasible_scale(center, unit, 1e6);
    const double back = max_feasible_scale(center, unit_neg, 1e6);
    const double shift = 0.5 * (ahead - back);
    std::vector<Hermitian> effects;
    for (int i = 0; i < center.n_effects(); ++i) {
      effects.push_back(center.effect(i) + unit[i] * shift);
    }
    center = JointMeasurement(center.outcome_counts(), std::move(effects));
    directions.emplace_back(center.outcome_counts(), std::move(unit));
  }
  throw SolverFailure(
      "joint_set_affine_dimension: direction cap (1000) exceeded");
}

bool tuple_extremal_jm(const MeasurementTuple& t) {
  const JointMeasurement base = max_min_eig_joint(t).joint;
  const auto quick = symmetric_perturbation_precheck(base);
  if (quick.has_value() && frobenius_norm(*quick) >= kEpsUnique) return false;
  if (sweep_marginal_perturbations(base, face_of(base), {}).direction.has_value()) {
    return false;
  }
  return is_extremal_povm(base.as_povm()).extremal;
}

}  // namespace jm
