#pragma once

#include <string>
#include <utility>
#include <vector>

#include "jm/joint.hpp"

namespace jm {

// Nontrivial convex split of a tuple into two compatible tuples, together
// with explicit joint measurements certifying the compatibility of each
// half.
struct Decomposition {
  MeasurementTuple plus;
  MeasurementTuple minus;
  int rounds_used = 0;
  JointMeasurement joint_plus;
  JointMeasurement joint_minus;
};

// Constructive round algorithm: given two distinct joints M, M' of T, build
// masked joints from D = M' - M (outcomes relabeled so the strongest block
// of D sits at (1,...,1)), take marginals, and stop at the first round whose
// candidate tuples differ from T; at most m - 1 rounds are needed.
Decomposition decompose_tuple(const MeasurementTuple& t,
                              const JointMeasurement& m,
                              const JointMeasurement& m_prime);

// Variant targeting one measurement: reorders the round schedule so the
// condition for party `party` (0-based) is consumed last, returning POVMs
// B+ != B- with A^(party) = (B+ + B-)/2, each the marginal of a masked joint
// decomposing T. Throws when the supplied pair of joints induces no split of
// that party (possible for m >= 3).
std::pair<Povm, Povm> decompose_measurement(const MeasurementTuple& t,
                                            int party,
                                            const JointMeasurement& m,
                                            const JointMeasurement& m_prime);

struct DecompositionReport {
  bool ok = false;
  bool trivial = false;  // both halves coincide with the input
  double average_residual = 0.0;
  bool plus_compatible = false;
  bool minus_compatible = false;
  std::vector<std::string> checks;  // one line per verified item
};

// Checks (B + C)/2 = T per effect within tol, compatibility of both halves
// via the feasibility SDP, and flags trivial splits.
DecompositionReport verify_decomposition(const MeasurementTuple& t,
                                         const MeasurementTuple& b,
                                         const MeasurementTuple& c,
                                         double tol = kEpsEq);

}  // namespace jm
