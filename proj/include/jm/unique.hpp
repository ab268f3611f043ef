#pragma once

#include <optional>

#include "jm/joint.hpp"

namespace jm {

// Threshold separating a numerically zero sweep optimum from a genuine
// perturbation direction; two orders above the solver residual target.
inline constexpr double kEpsUnique = 1e-6;

enum class Verdict { kUnique, kNonUnique };

struct UniquenessVerdict {
  Verdict verdict = Verdict::kUnique;
  std::optional<MarginalPerturbation> witness;
  std::optional<JointMeasurement> second_joint;
  double max_objective_seen = 0.0;
};

// Sweeps all (multi-index, basis element, sign) objectives of the
// marginal-preserving perturbation program: maximize +/- tr(D_a lambda)
// subject to M_b + D_b >= 0 for every cell and all single-party marginals of
// D vanishing. Returns the first direction whose objective exceeds
// kEpsUnique, scaled back to feasibility; None when every objective stays
// below. The optional fast pre-check below short-circuits the sweep.
std::optional<MarginalPerturbation> find_marginal_perturbation(
    const JointMeasurement& m, bool use_precheck = true);

// Support-compressed null-space shortcut: a nonzero Hermitian family with
// support(D_a) inside support(M_a) and vanishing marginals yields joints
// M +/- eps D for small eps. Some(...) certifies non-uniqueness; None is NOT
// a uniqueness certificate (one-sided perturbations may remain).
std::optional<MarginalPerturbation> symmetric_perturbation_precheck(
    const JointMeasurement& m);

// Decides uniqueness of the joint measurement for a compatible tuple:
// obtains the min-eigenvalue-maximizing joint, runs the pre-check, then the
// full sweep. Throws IncompatibleTuple on incompatible input.
UniquenessVerdict joint_uniqueness(const MeasurementTuple& t);

// Dimension of the affine hull of the set of joint measurements: collects
// sweep directions, recenters at the midpoint of the extreme steps along
// each, and repeats until no new direction exceeds kEpsUnique. Zero iff the
// joint measurement is unique.
int joint_set_affine_dimension(const MeasurementTuple& t);

// Extremality in the compatible set: true iff the joint measurement is
// unique and, viewed as an n^m-outcome POVM, extremal.
bool tuple_extremal_jm(const MeasurementTuple& t);

}  // namespace jm
