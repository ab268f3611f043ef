#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "jm/joint.hpp"

namespace jm::fixtures {

// sqrt-free constants shared by every fixture, computed once at full
// precision so golden files stay stable.
double inv_sqrt2();
double inv_sqrt3();
double t_star();  // critical visibility of the Pauli triple, 1/sqrt(3)

Hermitian pauli(char w);  // 'x', 'y', 'z'

// Dichotomic Pauli measurement A^w with effects (identity +/- sigma_w)/2;
// outcome 0 carries the + sign.
Povm pauli_povm(char w);

MeasurementTuple pauli_triple();  // [A^x, A^y, A^z]
MeasurementTuple pauli_pair_xz();
MeasurementTuple example2_tuple();  // [(identity, 0), (identity/2, identity/2)]
MeasurementTuple trivial_coins(const std::vector<double>& p,
                               const std::vector<double>& q, int dim = 2);

// 8-outcome joint measurements for the depolarised Pauli triple at the
// critical visibility: the central one and the two SIC tetrahedra.
JointMeasurement central_joint_tstar();
JointMeasurement sic_joint(int sign);  // +1 or -1

// The two halves of the worked decomposition of the depolarised triple.
MeasurementTuple paper_b_tuple();
MeasurementTuple paper_c_tuple();

using Fixture = std::variant<MeasurementTuple, JointMeasurement>;

// Closed fixture enumeration by name: pauli-triple, pauli-pair-xz,
// example-2, trivial-coins (parameterized by p and q), sic-joint-plus,
// sic-joint-minus, central-joint-tstar, paper-B, paper-C.
Fixture make_fixture(const std::string& name,
                     const std::vector<double>& p = {},
                     const std::vector<double>& q = {});

std::vector<std::string> fixture_names();

enum class RandomPovmKind { kFullRank, kRankOne, kProjective };

// Seed-deterministic random POVMs: random PSD matrices normalized by the
// inverse square root of their sum; projective kind requires n <= dim.
Povm random_povm(int dim, int n_outcomes, RandomPovmKind kind, uint64_t seed);

// m independent random full-rank POVMs, each depolarised to the requested
// visibility.
MeasurementTuple random_tuple(int dim, int n_outcomes, int m, double visibility,
                              uint64_t seed);

// Classical post-processing of a: effects sum_i q(j|i) a_i with a seeded
// stochastic matrix q; always compatible with a by construction.
Povm random_post_processing(const Povm& a, int n_outcomes, uint64_t seed);

// Seeded probability vector with all entries strictly inside (0, 1).
std::vector<double> random_interior_probabilities(int n, uint64_t seed);

}  // namespace jm::fixtures
