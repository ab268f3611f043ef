#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "jm/herm.hpp"

namespace jm {

struct Violation {
  std::string what;
  int effect = -1;      // offending effect index, -1 for global violations
  double residual = 0;  // eigenvalue or Frobenius residual
};

struct PovmValidation;

// Ordered sequence of PSD effects summing to the identity.
class Povm {
 public:
  Povm(std::vector<Hermitian> effects, double tol = kEpsPsd);

  int dim() const { return effects_.empty() ? 0 : effects_[0].dim(); }
  int n_outcomes() const { return static_cast<int>(effects_.size()); }
  const std::vector<Hermitian>& effects() const& { return effects_; }
  void effects() const&& = delete;
  const Hermitian& effect(int i) const { return effects_.at(i); }

 private:
  friend PovmValidation validate_povm(const std::vector<Hermitian>& effects,
                                      double tol);
  Povm() = default;
  std::vector<Hermitian> effects_;
};

struct PovmValidation {
  std::optional<Povm> povm;
  std::vector<Violation> violations;
  bool ok() const { return povm.has_value(); }
};

// Checks each effect for positivity and the sum for normalization; collects
// every violated invariant with its residual instead of stopping early.
PovmValidation validate_povm(const std::vector<Hermitian>& effects,
                             double tol = kEpsPsd);

// Tuple of m POVMs acting on the same space. Outcome counts may differ per
// measurement.
class MeasurementTuple {
 public:
  explicit MeasurementTuple(std::vector<Povm> measurements);

  int dim() const { return measurements_[0].dim(); }
  int size() const { return static_cast<int>(measurements_.size()); }
  const std::vector<Povm>& measurements() const& { return measurements_; }
  void measurements() const&& = delete;
  const Povm& measurement(int j) const { return measurements_.at(j); }

 private:
  std::vector<Povm> measurements_;
};

// Hermitian blocks with zero sum: added to a POVM effect-wise they preserve
// normalization; positivity of the perturbed effects is the caller's side of
// the contract.
class Perturbation {
 public:
  Perturbation(std::vector<Hermitian> blocks, double tol = kEpsEq);

  int dim() const { return blocks_[0].dim(); }
  int size() const { return static_cast<int>(blocks_.size()); }
  const std::vector<Hermitian>& blocks() const& { return blocks_; }
  void blocks() const&& = delete;

 private:
  std::vector<Hermitian> blocks_;
};

double frobenius_norm(const Perturbation& d);

// Effect-wise depolarising map A_i -> t A_i + (1-t) tr(A_i)/d * identity.
// t outside [0, 1] is rejected unless allow_t_above_one is set, in which
// case the output is re-validated and may throw.
Povm depolarize(const Povm& a, double t, bool allow_t_above_one = false);
MeasurementTuple depolarize(const MeasurementTuple& t, double visibility,
                            bool allow_t_above_one = false);

// The trivial counterpart A^Tr = (tr(A_i)/d * identity)_i together with the
// depolarising perturbation D^Tr = A^Tr - A, so A + D^Tr = A^Tr.
std::pair<Povm, Perturbation> trivial_counterpart(const Povm& a);

bool is_projective(const Povm& a, double tol = 1e-9);

struct ExtremalityResult {
  bool extremal = false;
  // When non-extremal: a symmetric perturbation scaled so the tightest PSD
  // constraint of A +/- witness has margin exactly zero.
  std::optional<Perturbation> witness;
};

// Symmetric-perturbation criterion by support-compressed null-space linear
// algebra: A is extremal iff no nonzero Hermitian tuple (D_i) exists with
// support(D_i) inside support(A_i) and sum D_i = 0.
ExtremalityResult is_extremal_povm(const Povm& a, double tol = 1e-9);

// Kernel criterion: A lies in the boundary of the POVM set iff some effect
// is rank deficient.
bool is_boundary_povm(const Povm& a, double tol = 1e-9);

// Componentwise criteria for tuples.
bool tuple_is_extremal(const MeasurementTuple& t, double tol = 1e-9);
bool tuple_is_boundary(const MeasurementTuple& t, double tol = 1e-9);

// Outcome relabeling: effect i moves to position perm[i]; perm must be a
// bijection on {0..n-1}.
Povm relabel(const Povm& a, const std::vector<int>& perm);

}  // namespace jm
