#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "jm/povm.hpp"

namespace jm {

// The conic layer could not certify a result; distinct from incompatibility
// and never silently reinterpreted.
struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IncompatibleTuple : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Outcome tuple (a_1 ... a_m), one entry per party, 0-based.
struct MultiIndex {
  std::vector<int> outcomes;
};

// POVM indexed by outcome multi-indices, stored densely in lexicographic
// order with the last index fastest.
class JointMeasurement {
 public:
  JointMeasurement(std::vector<int> outcome_counts,
                   std::vector<Hermitian> effects, double tol = kEpsPsd);

  int dim() const { return effects_[0].dim(); }
  int parties() const { return static_cast<int>(outcome_counts_.size()); }
  const std::vector<int>& outcome_counts() const { return outcome_counts_; }
  int n_effects() const { return static_cast<int>(effects_.size()); }
  const std::vector<Hermitian>& effects() const& { return effects_; }
  void effects() const&& = delete;
  const Hermitian& effect(int flat) const { return effects_.at(flat); }
  const Hermitian& effect(const std::vector<int>& multi) const;

  // The same effects viewed as a plain n^m-outcome POVM.
  Povm as_povm() const { return Povm(effects_); }

  static int flat_index(const std::vector<int>& counts,
                        const std::vector<int>& multi);
  static std::vector<int> multi_index(const std::vector<int>& counts, int flat);

 private:
  std::vector<int> outcome_counts_;
  std::vector<Hermitian> effects_;
};

// Hermitian blocks per multi-index whose every single-party marginal
// vanishes; adding one to a joint measurement preserves all marginals.
class MarginalPerturbation {
 public:
  MarginalPerturbation(std::vector<int> outcome_counts,
                       std::vector<Hermitian> blocks, double tol = kEpsEq);

  int dim() const { return blocks_[0].dim(); }
  const std::vector<int>& outcome_counts() const { return outcome_counts_; }
  const std::vector<Hermitian>& blocks() const& { return blocks_; }
  void blocks() const&& = delete;
  const Hermitian& block(int flat) const { return blocks_.at(flat); }

 private:
  std::vector<int> outcome_counts_;
  std::vector<Hermitian> blocks_;
};

double frobenius_norm(const MarginalPerturbation& d);
JointMeasurement add_perturbation(const JointMeasurement& m,
                                  const MarginalPerturbation& d,
                                  double tol = kEpsPsd);

// Coarse-grains over all parties except `party` (0-based); the result is
// validated as a POVM.
Povm marginal(const JointMeasurement& m, int party);

struct VerifyReport {
  bool ok = false;
  double worst_residual = 0.0;
  int worst_party = -1;
  int worst_outcome = -1;
};

// True iff every marginal of M matches the corresponding POVM of T within
// tol in Frobenius norm, effect by effect.
VerifyReport verify_joint(const JointMeasurement& m, const MeasurementTuple& t,
                          double tol = kEpsEq);

struct InfeasibilityCertificate {
  std::vector<Hermitian> multipliers;  // one PSD block per joint effect
  double pairing_residual = 0.0;
  double value = 0.0;  // strictly negative against the tuple data
};

struct JointSearch {
  std::optional<JointMeasurement> joint;
  std::optional<InfeasibilityCertificate> certificate;
};

// Feasibility SDP for the marginal conditions. Incompatibility comes with a
// dual improving-ray certificate; numerical failure throws SolverFailure.
JointSearch find_joint_certified(const MeasurementTuple& t);
std::optional<JointMeasurement> find_joint(const MeasurementTuple& t);

struct VisibilityResult {
  double t_star = 0.0;
  JointMeasurement joint;  // joint measurement for the tuple at t_star
};

// Largest t in [0, 1] such that the depolarised tuple stays compatible;
// t enters the marginal equalities affinely, so this is a single SDP.
VisibilityResult critical_visibility(const MeasurementTuple& t);

// Joint measurement of a tuple of trivial POVMs: effects are products of the
// outcome probabilities times the identity.
JointMeasurement product_joint_trivial(
    const std::vector<std::vector<double>>& probs, int dim);

struct MinEigJoint {
  double s_star = 0.0;
  JointMeasurement joint;
};

// Maximizes s subject to M_a - s*identity >= 0 and the marginal equalities:
// s* above tolerance certifies a joint with all effects full rank, s* at
// zero certifies that every joint has a rank-deficient effect.
MinEigJoint max_min_eig_joint(const MeasurementTuple& t);

// Boundary-of-the-compatible-set test: true iff max_min_eig_joint stays
// within tol of zero.
bool tuple_boundary_jm(const MeasurementTuple& t, double tol = 1e-6);

}  // namespace jm
