#include "jm/decomp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "jm/unique.hpp"

namespace jm {

namespace {

// outcome relabeling of a joint: new multi-index entry j is perm[j][old]
JointMeasurement relabel_joint(const JointMeasurement& m,
                               const std::vector<std::vector<int>>& perms) {
  const auto& counts = m.outcome_counts();
  std::vector<Hermitian> effects(m.n_effects(), Hermitian::zero(m.dim()));
  for (int flat = 0; flat < m.n_effects(); ++flat) {
    std::vector<int> multi = JointMeasurement::multi_index(counts, flat);
    for (size_t j = 0; j < multi.size(); ++j) multi[j] = perms[j][multi[j]];
    effects[JointMeasurement::flat_index(counts, multi)] = m.effect(flat);
  }
  return JointMeasurement(counts, std::move(effects));
}

MeasurementTuple relabel_tuple(const MeasurementTuple& t,
                               const std::vector<std::vector<int>>& perms) {
  std::vector<Povm> ms;
  ms.reserve(t.size());
  for (int j = 0; j < t.size(); ++j)
    ms.push_back(relabel(t.measurement(j), perms[j]));
  return MeasurementTuple(std::move(ms));
}

std::vector<std::vector<int>> inverse_perms(
    const std::vector<std::vector<int>>& perms) {
  std::vector<std::vector<int>> inv(perms.size());
  for (size_t j = 0; j < perms.size(); ++j) {
    inv[j].resize(perms[j].size());
    for (size_t i = 0; i < perms[j].size(); ++i)
      inv[j][perms[j][i]] = static_cast<int>(i);
  }
  return inv;
}

std::vector<Hermitian> difference_blocks(const JointMeasurement& a,
                                         const JointMeasurement& b) {
  std::vector<Hermitian> d;
  d.reserve(a.n_effects());
  for (int i = 0; i < a.n_effects(); ++i)
    d.push_back(b.effect(i) - a.effect(i));
  return d;
}

void require_joints_of(const MeasurementTuple& t, const JointMeasurement& m,
                       const JointMeasurement& m_prime) {
  const VerifyReport r1 = verify_joint(m, t, 1e-7);
  if (!r1.ok) {
    throw std::invalid_argument(
        "decompose: first joint does not reproduce the tuple, residual " +
        std::to_string(r1.worst_residual));
  }
  const VerifyReport r2 = verify_joint(m_prime, t, 1e-7);
  if (!r2.ok) {
    throw std::invalid_argument(
        "decompose: second joint does not reproduce the tuple, residual " +
        std::to_string(r2.worst_residual));
  }
}

MeasurementTuple marginals_of(const JointMeasurement& m) {
  std::vector<Povm> ms;
  ms.reserve(m.parties());
  for (int j = 0; j < m.parties(); ++j) ms.push_back(marginal(m, j));
  return MeasurementTuple(std::move(ms));
}

double tuple_distance(const MeasurementTuple& a, const MeasurementTuple& b) {
  double worst = 0.0;
  for (int j = 0; j < a.size(); ++j) {
    for (int i = 0; i < a.measurement(j).n_outcomes(); ++i) {
      worst = std::max(worst,
                       frobenius_norm(a.measurement(j).effect(i) -
                                      b.measurement(j).effect(i)));
    }
  }
  return worst;
}

}  // namespace

Decomposition decompose_tuple(const MeasurementTuple& t,
                              const JointMeasurement& m,
                              const JointMeasurement& m_prime) {
  require_joints_of(t, m, m_prime);
  const auto& counts = m.outcome_counts();
  const int parties = m.parties();
  const int cells = m.n_effects();

  // pivot: lexicographically first cell where ||D|| is maximal
  std::vector<Hermitian> d0 = difference_blocks(m, m_prime);
  int pivot = 0;
  double best = -1.0;
  for (int flat = 0; flat < cells; ++flat) {
    const double norm = frobenius_norm(d0[flat]);
    if (norm > best + 1e-15) {
      best = norm;
      pivot = flat;
    }
  }
  if (best <= kEpsUnique) {
    throw std::invalid_argument(
        "decompose_tuple: joints coincide, no perturbation direction");
  }

  // relabel outcomes so the pivot cell becomes (1,...,1)
  std::vector<std::vector<int>> perms(parties);
  const std::vector<int> pivot_multi =
      JointMeasurement::multi_index(counts, pivot);
  for (int j = 0; j < parties; ++j) {
    perms[j].resize(counts[j]);
    for (int i = 0; i < counts[j]; ++i) perms[j][i] = i;
    std::swap(perms[j][pivot_multi[j]], perms[j][0]);
  }
  const std::vector<std::vector<int>> undo = inverse_perms(perms);

  const MeasurementTuple rt = relabel_tuple(t, perms);
  const JointMeasurement rm = relabel_joint(m, perms);
  const JointMeasurement rm_prime = relabel_joint(m_prime, perms);
  const std::vector<Hermitian> d = difference_blocks(rm, rm_prime);

  for (int round = 1; round <= parties - 1; ++round) {
    // mask selects the cells whose first `round` indices all sit at the
    // relabeled outcome 1; its D-sum vanishes by the cascade of previous
    // trivial rounds
    std::vector<Hermitian> plus_eff, minus_eff;
    plus_eff.reserve(cells);
    minus_eff.reserve(cells);
    for (int flat = 0; flat < cells; ++flat) {
      const auto multi = JointMeasurement::multi_index(counts, flat);
      bool masked = true;
      for (int j = 0; j < round; ++j) masked = masked && multi[j] == 0;
      if (masked) {
        plus_eff.push_back(rm.effect(flat) + d[flat]);
        minus_eff.push_back(rm_prime.effect(flat) - d[flat]);
      } else {
        plus_eff.push_back(rm.effect(flat));
        minus_eff.push_back(rm_prime.effect(flat));
      }
    }
    const JointMeasurement joint_plus(counts, std::move(plus_eff), 1e-7);
    const JointMeasurement joint_minus(counts, std::move(minus_eff), 1e-7);
    const MeasurementTuple cand_plus = marginals_of(joint_plus);
    const MeasurementTuple cand_minus = marginals_of(joint_minus);

    const bool nontrivial = tuple_distance(cand_plus, rt) >= kEpsUnique ||
                            tuple_distance(cand_minus, rt) >= kEpsUnique;
    if (nontrivial || round == parties - 1) {
      if (!nontrivial) {
        throw SolverFailure(
            "decompose_tuple: final round unexpectedly trivial");
      }
      Decomposition out{relabel_tuple(cand_plus, undo),
                        relabel_tuple(cand_minus, undo), round,
                        relabel_joint(joint_plus, undo),
                        relabel_joint(joint_minus, undo)};
      return out;
    }
  }
  // parties == 1 cannot reach here: the single marginal pins the joint, so
  // distinct joints are impossible and the pivot check throws first
  throw SolverFailure("decompose_tuple: no round available");
}

std::pair<Povm, Povm> decompose_measurement(const MeasurementTuple& t,
                                            int party,
                                            const JointMeasurement& m,
                                            const JointMeasurement& m_prime) {
  if (party < 0 || party >= t.size()) {
    throw std::invalid_argument("decompose_measurement: party out of range");
  }
  require_joints_of(t, m, m_prime);
  const auto& counts = m.outcome_counts();
  const int parties = m.parties();
  const int cells = m.n_effects();
  const int d = m.dim();

  std::vector<Hermitian> diff = difference_blocks(m, m_prime);
  double dnorm = 0.0;
  for (const auto& b : diff) dnorm = std::max(dnorm, frobenius_norm(b));
  if (dnorm <= kEpsUnique) {
    throw std::invalid_argument(
        "decompose_measurement: joints coincide, no perturbation direction");
  }

  // Enumerate mask sets over the other parties with fixed outcomes, ordered
  // by size then lexicographically: the smallest prefix of a j-last schedule
  // that perturbs party j. A mask is usable when its D-sum vanishes (the
  // masked joints stay normalized) and the party-j marginal of the masked D
  // is nonzero.
  std::vector<int> others;
  for (int j = 0; j < parties; ++j) {
    if (j != party) others.push_back(j);
  }

  for (int size = 1; size <= static_cast<int>(others.size()); ++size) {
    std::vector<int> pick(size);
    std::vector<bool> comb(others.size(), false);
    std::fill(comb.begin(), comb.begin() + size, true);
    // iterate combinations in lexicographic order
    std::vector<std::vector<int>> subsets;
    do {
      std::vector<int> q;
      for (size_t i = 0; i < others.size(); ++i) {
        if (comb[i]) q.push_back(others[i]);
      }
      subsets.push_back(std::move(q));
    } while (std::prev_permutation(comb.begin(), comb.end()));
    std::sort(subsets.begin(), subsets.end());

    for (const auto& q : subsets) {
      // all outcome assignments for the masked parties
      int assignments = 1;
      for (int j : q) assignments *= counts[j];
      for (int idx = 0; idx < assignments; ++idx) {
        std::vector<int> fixed(q.size());
        int rest = idx;
        for (int pos = static_cast<int>(q.size()) - 1; pos >= 0; --pos) {
          fixed[pos] = rest % counts[q[pos]];
          rest /= counts[q[pos]];
        }
        auto in_mask = [&](const std::vector<int>& multi) {
          for (size_t pos = 0; pos < q.size(); ++pos) {
            if (multi[q[pos]] != fixed[pos]) return false;
          }
          return true;
        };

        Hermitian mask_sum = Hermitian::zero(d);
        std::vector<Hermitian> j_marginal(counts[party], Hermitian::zero(d));
        for (int flat = 0; flat < cells; ++flat) {
          const auto multi = JointMeasurement::multi_index(counts, flat);
          if (!in_mask(multi)) continue;
          mask_sum += diff[flat];
          j_marginal[multi[party]] += diff[flat];
        }
        if (frobenius_norm(mask_sum) > kEpsEq) continue;
        double j_change = 0.0;
        for (const auto& g : j_marginal)
          j_change = std::max(j_change, frobenius_norm(g));
        if (j_change < kEpsUnique) continue;

        std::vector<Hermitian> plus_eff, minus_eff;
        plus_eff.reserve(cells);
        minus_eff.reserve(cells);
        for (int flat = 0; flat < cells; ++flat) {
          const auto multi = JointMeasurement::multi_index(counts, flat);
          if (in_mask(multi)) {
            plus_eff.push_back(m.effect(flat) + diff[flat]);
            minus_eff.push_back(m_prime.effect(flat) - diff[flat]);
          } else {
            plus_eff.push_back(m.effect(flat));
            minus_eff.push_back(m_prime.effect(flat));
          }
        }
        const JointMeasurement joint_plus(counts, std::move(plus_eff), 1e-7);
        const JointMeasurement joint_minus(counts, std::move(minus_eff), 1e-7);
        return {marginal(joint_plus, party), marginal(joint_minus, party)};
      }
    }
  }
  std::ostringstream os;
  os << "decompose_measurement: the supplied pair of joints induces no "
     << "split of measurement " << party + 1
     << " (no usable mask over the remaining parties)";
  throw std::runtime_error(os.str());
}

DecompositionReport verify_decomposition(const MeasurementTuple& t,
                                         const MeasurementTuple& b,
                                         const MeasurementTuple& c,
                                         double tol) {
  if (b.size() != t.size() || c.size() != t.size() || b.dim() != t.dim() ||
      c.dim() != t.dim()) {
    throw std::invalid_argument("verify_decomposition: shape mismatch");
  }
  for (int j = 0; j < t.size(); ++j) {
    if (b.measurement(j).n_outcomes() != t.measurement(j).n_outcomes() ||
        c.measurement(j).n_outcomes() != t.measurement(j).n_outcomes()) {
      throw std::invalid_argument("verify_decomposition: outcome mismatch");
    }
  }

  DecompositionReport rep;
  std::ostringstream line;
  for (int j = 0; j < t.size(); ++j) {
    for (int i = 0; i < t.measurement(j).n_outcomes(); ++i) {
      const Hermitian avg =
          (b.measurement(j).effect(i) + c.measurement(j).effect(i)) * 0.5;
      rep.average_residual = std::max(
          rep.average_residual,
          frobenius_norm(avg - t.measurement(j).effect(i)));
    }
  }
  line << "average reproduces the tuple: residual " << rep.average_residual
       << (rep.average_residual <= tol ? " (pass)" : " (fail)");
  rep.checks.push_back(line.str());

  rep.plus_compatible = find_joint(b).has_value();
  rep.checks.push_back(std::string("first half compatible: ") +
                       (rep.plus_compatible ? "yes" : "no"));
  rep.minus_compatible = find_joint(c).has_value();
  rep.checks.push_back(std::string("second half compatible: ") +
                       (rep.minus_compatible ? "yes" : "no"));

  const double dist =
      std::max(tuple_distance(b, t), tuple_distance(c, t));
  rep.trivial = dist < kEpsUnique;
  rep.checks.push_back(std::string("nontrivial: ") +
                       (rep.trivial ? "no (both halves equal the input)"
                                    : "yes"));

  rep.ok = rep.average_residual <= tol && rep.plus_compatible &&
           rep.minus_compatible;
  return rep;
}

}  // namespace jm
