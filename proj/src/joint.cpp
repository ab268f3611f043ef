#include "jm/joint.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "jm/conic.hpp"

namespace jm {

namespace {

int total_cells(const std::vector<int>& counts) {
  int n = 1;
  for (int c : counts) {
    if (c < 1) throw std::invalid_argument("outcome counts must be >= 1");
    n *= c;
  }
  return n;
}

std::string cell_name(const std::vector<int>& counts, int flat) {
  const std::vector<int> multi = JointMeasurement::multi_index(counts, flat);
  std::string s = "M";
  for (int a : multi) s += "_" + std::to_string(a + 1);
  return s;
}

// Marginal equality expressions shared by the feasibility, visibility and
// min-eigenvalue programs. Party j, outcome i: sum of all cells with
// multi[j] == i.
conic::AffineExpr marginal_expr(const std::vector<int>& counts,
                                const std::vector<int>& cell_vars, int party,
                                int outcome, int dim) {
  conic::AffineExpr e = conic::AffineExpr::zero(dim);
  const int n = total_cells(counts);
  for (int flat = 0; flat < n; ++flat) {
    if (JointMeasurement::multi_index(counts, flat)[party] == outcome) {
      e.add_scaled(cell_vars[flat], 1.0);
    }
  }
  return e;
}

std::vector<int> tuple_counts(const MeasurementTuple& t) {
  std::vector<int> counts;
  counts.reserve(t.size());
  for (const auto& m : t.measurements()) counts.push_back(m.n_outcomes());
  return counts;
}

}  // namespace

JointMeasurement::JointMeasurement(std::vector<int> outcome_counts,
                                   std::vector<Hermitian> effects, double tol)
    : outcome_counts_(std::move(outcome_counts)), effects_(std::move(effects)) {
  const int n = total_cells(outcome_counts_);
  if (static_cast<int>(effects_.size()) != n) {
    throw std::invalid_argument("JointMeasurement: expected " +
                                std::to_string(n) + " effects");
  }
  PovmValidation val = validate_povm(effects_, tol);
  if (!val.ok()) {
    std::ostringstream os;
    os << "JointMeasurement invalid:";
    for (const auto& v : val.violations)
      os << " [" << v.what << " effect " << v.effect << " residual "
         << v.residual << "]";
    throw std::invalid_argument(os.str());
  }
}

const Hermitian& JointMeasurement::effect(const std::vector<int>& multi) const {
  return effects_.at(flat_index(outcome_counts_, multi));
}

int JointMeasurement::flat_index(const std::vector<int>& counts,
                                 const std::vector<int>& multi) {
  if (multi.size() != counts.size()) {
    throw std::invalid_argument("multi-index arity mismatch");
  }
  int flat = 0;
  for (size_t j = 0; j < counts.size(); ++j) {
    if (multi[j] < 0 || multi[j] >= counts[j]) {
      throw std::invalid_argument("multi-index entry out of range");
    }
    flat = flat * counts[j] + multi[j];
  }
  return flat;
}

std::vector<int> JointMeasurement::multi_index(const std::vector<int>& counts,
                                               int flat) {
  std::vector<int> multi(counts.size());
  for (int j = static_cast<int>(counts.size()) - 1; j >= 0; --j) {
    multi[j] = flat % counts[j];
    flat /= counts[j];
  }
  return multi;
}

MarginalPerturbation::MarginalPerturbation(std::vector<int> outcome_counts,
                                           std::vector<Hermitian> blocks,
                                           double tol)
    : outcome_counts_(std::move(outcome_counts)), blocks_(std::move(blocks)) {
  const int n = total_cells(outcome_counts_);
  if (static_cast<int>(blocks_.size()) != n) {
    throw std::invalid_argument("MarginalPerturbation: expected " +
                                std::to_string(n) + " blocks");
  }
  const int d = blocks_[0].dim();
  for (size_t j = 0; j < outcome_counts_.size(); ++j) {
    for (int i = 0; i < outcome_counts_[j]; ++i) {
      Hermitian sum = Hermitian::zero(d);
      for (int flat = 0; flat < n; ++flat) {
        if (JointMeasurement::multi_index(outcome_counts_, flat)[j] == i) {
          sum += blocks_[flat];
        }
      }
      const double res = frobenius_norm(sum);
      if (res > tol) {
        throw std::invalid_argument(
            "MarginalPerturbation: marginal (party " + std::to_string(j + 1) +
            ", outcome " + std::to_string(i + 1) + ") nonzero, residual " +
            std::to_string(res));
      }
    }
  }
}

double frobenius_norm(const MarginalPerturbation& d) {
  double sq = 0.0;
  for (const auto& b : d.blocks()) sq += frobenius_norm(b) * frobenius_norm(b);
  return std::sqrt(sq);
}

JointMeasurement add_perturbation(const JointMeasurement& m,
                                  const MarginalPerturbation& d, double tol) {
  if (m.outcome_counts() != d.outcome_counts() || m.dim() != d.dim()) {
    throw std::invalid_argument("add_perturbation: shape mismatch");
  }
  std::vector<Hermitian> effects;
  effects.reserve(m.n_effects());
  for (int i = 0; i < m.n_effects(); ++i)
    effects.push_back(m.effect(i) + d.block(i));
  return JointMeasurement(m.outcome_counts(), std::move(effects), tol);
}

Povm marginal(const JointMeasurement& m, int party) {
  if (party < 0 || party >= m.parties()) {
    throw std::invalid_argument("marginal: party index out of range");
  }
  const auto& counts = m.outcome_counts();
  std::vector<Hermitian> effects(counts[party], Hermitian::zero(m.dim()));
  for (int flat = 0; flat < m.n_effects(); ++flat) {
    const int i = JointMeasurement::multi_index(counts, flat)[party];
    effects[i] += m.effect(flat);
  }
  return Povm(std::move(effects));
}

VerifyReport verify_joint(const JointMeasurement& m, const MeasurementTuple& t,
                          double tol) {
  if (m.parties() != t.size() || m.dim() != t.dim()) {
    throw std::invalid_argument("verify_joint: shape mismatch");
  }
  for (int j = 0; j < t.size(); ++j) {
    if (m.outcome_counts()[j] != t.measurement(j).n_outcomes()) {
      throw std::invalid_argument("verify_joint: outcome count mismatch");
    }
  }
  VerifyReport rep;
  const auto& counts = m.outcome_counts();
  for (int j = 0; j < t.size(); ++j) {
    std::vector<Hermitian> sums(counts[j], Hermitian::zero(m.dim()));
    for (int flat = 0; flat < m.n_effects(); ++flat) {
      sums[JointMeasurement::multi_index(counts, flat)[j]] += m.effect(flat);
    }
    for (int i = 0; i < counts[j]; ++i) {
      const double res = frobenius_norm(sums[i] - t.measurement(j).effect(i));
      if (res > rep.worst_residual) {
        rep.worst_residual = res;
        rep.worst_party = j;
        rep.worst_outcome = i;
      }
    }
  }
  rep.ok = rep.worst_residual <= tol;
  return rep;
}

JointSearch find_joint_certified(const MeasurementTuple& t) {
  const std::vector<int> counts = tuple_counts(t);
  const int cells = total_cells(counts);
  const int d = t.dim();

  conic::SdpProblem p;
  std::vector<int> vars(cells);
  for (int flat = 0; flat < cells; ++flat) {
    vars[flat] = p.add_variable(cell_name(counts, flat), d);
    p.require_psd(conic::AffineExpr::zero(d).add_scaled(vars[flat], 1.0));
  }
  for (int j = 0; j < t.size(); ++j) {
    for (int i = 0; i < counts[j]; ++i) {
      conic::AffineExpr e = marginal_expr(counts, vars, j, i, d);
      e.add_constant(-t.measurement(j).effect(i));
      p.require_zero(e);
    }
  }

  const conic::SdpSolution sol = conic::solve_sdp(p);
  JointSearch out;
  switch (sol.status) {
    case conic::SdpStatus::kOptimal: {
      out.joint = JointMeasurement(counts, sol.values);
      return out;
    }
    case conic::SdpStatus::kInfeasible: {
      InfeasibilityCertificate cert;
      cert.multipliers = sol.ray;
      cert.pairing_residual = sol.ray_pairing_residual;
      cert.value = sol.ray_objective;
      out.certificate = std::move(cert);
      return out;
    }
    default:
      throw SolverFailure("find_joint: " + conic::to_string(sol.status) +
                          (sol.message.empty() ? "" : ": " + sol.message));
  }
}

std::optional<JointMeasurement> find_joint(const MeasurementTuple& t) {
  return find_joint_certified(t).joint;
}

VisibilityResult critical_visibility(const MeasurementTuple& t) {
  const std::vector<int> counts = tuple_counts(t);
  const int cells = total_cells(counts);
  const int d = t.dim();

  conic::SdpProblem p;
  std::vector<int> vars(cells);
  for (int flat = 0; flat < cells; ++flat) {
    vars[flat] = p.add_variable(cell_name(counts, flat), d);
    p.require_psd(conic::AffineExpr::zero(d).add_scaled(vars[flat], 1.0));
  }
  const int tv = p.add_variable("t", 1);
  // 0 <= t <= 1
  p.require_psd(conic::AffineExpr::zero(1).add_scaled(tv, 1.0));
  {
    conic::AffineExpr e = conic::AffineExpr::zero(1);
    e.add_constant(Hermitian::identity(1));
    e.add_scaled(tv, -1.0);
    p.require_psd(e);
  }

  // marginal_j(M) == t*(A_ji - tr(A_ji)/d) + tr(A_ji)/d * identity
  for (int j = 0; j < t.size(); ++j) {
    for (int i = 0; i < counts[j]; ++i) {
      const Hermitian& a = t.measurement(j).effect(i);
      const double tr = a.mat().trace().real();
      const Hermitian centered = a - Hermitian::identity(d) * (tr / d);
      conic::AffineExpr e = marginal_expr(counts, vars, j, i, d);
      e.add_scalar_times_op(tv, -centered);
      e.add_constant(Hermitian::identity(d) * (-tr / d));
      p.require_zero(e);
    }
  }
  p.objective.emplace_back(tv, Hermitian::identity(1));
  p.maximize = true;

  const conic::SdpSolution sol = conic::solve_sdp(p);
  if (sol.status != conic::SdpStatus::kOptimal) {
    throw SolverFailure("critical_visibility: " + conic::to_string(sol.status) +
                        (sol.message.empty() ? "" : ": " + sol.message));
  }
  VisibilityResult res{sol.objective_value,
                       JointMeasurement(counts,
                                        {sol.values.begin(),
                                         sol.values.begin() + cells})};
  return res;
}

JointMeasurement product_joint_trivial(
    const std::vector<std::vector<double>>& probs, int dim) {
  if (probs.empty()) throw std::invalid_argument("product_joint_trivial: m >= 1");
  std::vector<int> counts;
  for (const auto& pv : probs) {
    if (pv.empty()) throw std::invalid_argument("empty probability vector");
    double sum = 0.0;
    for (double x : pv) {
      if (x < 0.0) throw std::invalid_argument("negative probability");
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw std::invalid_argument("probability vector does not sum to 1");
    }
    counts.push_back(static_cast<int>(pv.size()));
  }
  const int cells = total_cells(counts);
  std::vector<Hermitian> effects;
  effects.reserve(cells);
  for (int flat = 0; flat < cells; ++flat) {
    const std::vector<int> multi = JointMeasurement::multi_index(counts, flat);
    double w = 1.0;
    for (size_t j = 0; j < multi.size(); ++j) w *= probs[j][multi[j]];
    effects.push_back(Hermitian::identity(dim) * w);
  }
  return JointMeasurement(counts, std::move(effects));
}

MinEigJoint max_min_eig_joint(const MeasurementTuple& t) {
  const std::vector<int> counts = tuple_counts(t);
  const int cells = total_cells(counts);
  const int d = t.dim();

  conic::SdpProblem p;
  std::vector<int> vars(cells);
  for (int flat = 0; flat < cells; ++flat)
    vars[flat] = p.add_variable(cell_name(counts, flat), d);
  const int sv = p.add_variable("s", 1);
  for (int flat = 0; flat < cells; ++flat) {
    conic::AffineExpr e = conic::AffineExpr::zero(d);
    e.add_scaled(vars[flat], 1.0);
    e.add_scalar_times_op(sv, -Hermitian::identity(d));
    p.require_psd(e);
  }
  for (int j = 0; j < t.size(); ++j) {
    for (int i = 0; i < counts[j]; ++i) {
      conic::AffineExpr e = marginal_expr(counts, vars, j, i, d);
      e.add_constant(-t.measurement(j).effect(i));
      p.require_zero(e);
    }
  }
  p.objective.emplace_back(sv, Hermitian::identity(1));
  p.maximize = true;

  const conic::SdpSolution sol = conic::solve_sdp(p);
  if (sol.status != conic::SdpStatus::kOptimal) {
    throw SolverFailure("max_min_eig_joint: " + conic::to_string(sol.status) +
                        (sol.message.empty() ? "" : ": " + sol.message));
  }
  const double s_star = sol.objective_value;
  if (s_star < -1e-7) {
    std::ostringstream os;
    os << "max_min_eig_joint: tuple incompatible (best min eigenvalue "
       << s_star << ")";
    throw IncompatibleTuple(os.str());
  }
  return MinEigJoint{
      s_star,
      JointMeasurement(counts, {sol.values.begin(), sol.values.begin() + cells})};
}

bool tuple_boundary_jm(const MeasurementTuple& t, double tol) {
  return max_min_eig_joint(t).s_star <= tol;
}

}  // namespace jm
