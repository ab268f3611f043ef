#include "jm/fixtures.hpp"

#include <cmath>

#include "doctest.h"

using namespace jm;
using namespace jm::fixtures;

TEST_CASE("pauli triple is projective") {
  const MeasurementTuple t = pauli_triple();
  REQUIRE(t.size() == 3);
  for (const auto& m : t.measurements()) CHECK(is_projective(m));
}

TEST_CASE("example 2 tuple closed form") {
  const MeasurementTuple t = example2_tuple();
  CHECK(frobenius_norm(t.measurement(0).effect(0) - Hermitian::identity(2)) == 0.0);
  CHECK(frobenius_norm(t.measurement(0).effect(1)) == 0.0);
  CHECK(frobenius_norm(t.measurement(1).effect(0) - Hermitian::identity(2) * 0.5) ==
        0.0);
}

TEST_CASE("SIC joints: four rank-1 effects on the parity cells") {
  for (int sign : {+1, -1}) {
    const JointMeasurement m = sic_joint(sign);
    int nonzero = 0;
    for (int flat = 0; flat < 8; ++flat) {
      const auto multi = JointMeasurement::multi_index({2, 2, 2}, flat);
      const int a = multi[0] == 0 ? 1 : -1;
      const int b = multi[1] == 0 ? 1 : -1;
      const int c = multi[2] == 0 ? 1 : -1;
      if (a * b * c == sign) {
        ++nonzero;
        CHECK(support_rank(m.effect(flat)) == 1);
        CHECK(m.effect(flat).mat().trace().real() ==
              doctest::Approx(0.5).epsilon(1e-14));
      } else {
        CHECK(frobenius_norm(m.effect(flat)) == 0.0);
      }
    }
    CHECK(nonzero == 4);
  }
  // exact entry check on the (+,+,+) cell of the plus joint
  const Hermitian e = sic_joint(+1).effect({0, 0, 0});
  CHECK(e.mat()(0, 0).real() ==
        doctest::Approx(0.25 * (1 + inv_sqrt3())).epsilon(1e-15));
  CHECK(e.mat()(0, 1) == Complex(0.25 * inv_sqrt3(), -0.25 * inv_sqrt3()));
}

TEST_CASE("fixture joints verify against the depolarised triple") {
  const MeasurementTuple target = depolarize(pauli_triple(), t_star());
  CHECK(verify_joint(central_joint_tstar(), target, 1e-12).ok);
  CHECK(verify_joint(sic_joint(+1), target, 1e-12).ok);
  CHECK(verify_joint(sic_joint(-1), target, 1e-12).ok);
}

TEST_CASE("central joint is the midpoint of the SIC pair") {
  const JointMeasurement c = central_joint_tstar();
  const JointMeasurement p = sic_joint(+1);
  const JointMeasurement m = sic_joint(-1);
  for (int flat = 0; flat < 8; ++flat) {
    const Hermitian mid = (p.effect(flat) + m.effect(flat)) * 0.5;
    CHECK(frobenius_norm(mid - c.effect(flat)) < 1e-12);
  }
}

TEST_CASE("paper decomposition tuples average to the depolarised triple") {
  const MeasurementTuple b = paper_b_tuple();
  const MeasurementTuple c = paper_c_tuple();
  const MeasurementTuple target = depolarize(pauli_triple(), t_star());
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 2; ++i) {
      const Hermitian avg =
          (b.measurement(j).effect(i) + c.measurement(j).effect(i)) * 0.5;
      CHECK(frobenius_norm(avg - target.measurement(j).effect(i)) < 1e-12);
    }
  }
}

TEST_CASE("make_fixture") {
  CHECK(std::holds_alternative<MeasurementTuple>(make_fixture("pauli-triple")));
  CHECK(std::holds_alternative<JointMeasurement>(make_fixture("sic-joint-plus")));
  CHECK(std::holds_alternative<MeasurementTuple>(
      make_fixture("trivial-coins", {0.5, 0.5}, {0.3, 0.7})));
  CHECK_THROWS_AS(make_fixture("nope"), std::invalid_argument);
  CHECK_THROWS_AS(make_fixture("trivial-coins", {0.5, 0.4}, {0.3, 0.7}),
                  std::invalid_argument);
}

TEST_CASE("random_povm") {
  SUBCASE("deterministic per seed") {
    const Povm a = random_povm(2, 2, RandomPovmKind::kFullRank, 7);
    const Povm b = random_povm(2, 2, RandomPovmKind::kFullRank, 7);
    for (int i = 0; i < 2; ++i)
      CHECK(frobenius_norm(a.effect(i) - b.effect(i)) == 0.0);
    const Povm c = random_povm(2, 2, RandomPovmKind::kFullRank, 8);
    CHECK(frobenius_norm(a.effect(0) - c.effect(0)) > 1e-6);
  }
  SUBCASE("always validates") {
    for (uint64_t seed = 0; seed < 10; ++seed) {
      const Povm a = random_povm(3, 4, RandomPovmKind::kFullRank, seed);
      CHECK(validate_povm(a.effects()).ok());
      const Povm r = random_povm(2, 3, RandomPovmKind::kRankOne, seed);
      CHECK(validate_povm(r.effects()).ok());
    }
  }
  SUBCASE("rank-one extremality matches the Gram-matrix oracle") {
    for (uint64_t seed = 3; seed < 13; ++seed) {
      const Povm a = random_povm(2, 4, RandomPovmKind::kRankOne, seed);
      Eigen::MatrixXd gram(4, 4);
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
          gram(i, j) = frobenius_inner(a.effect(i), a.effect(j));
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(gram);
      const bool independent =
          (svd.singularValues().array() > 1e-9 * svd.singularValues()(0))
              .count() == 4;
      CHECK(is_extremal_povm(a).extremal == independent);
    }
  }
  SUBCASE("projective kind") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
      const Povm p = random_povm(3, 3, RandomPovmKind::kProjective, seed);
      CHECK(is_projective(p));
      const Povm q = random_povm(3, 2, RandomPovmKind::kProjective, seed);
      CHECK(is_projective(q));
    }
    CHECK_THROWS_AS(random_povm(2, 3, RandomPovmKind::kProjective, 1),
                    std::invalid_argument);
  }
}

TEST_CASE("random_tuple") {
  SUBCASE("zero visibility yields trivial measurements") {
    const MeasurementTuple t = random_tuple(2, 2, 2, 0.0, 5);
    for (const auto& m : t.measurements()) {
      for (const auto& e : m.effects()) {
        const double tr = e.mat().trace().real();
        CHECK(frobenius_norm(e - Hermitian::identity(2) * (tr / 2.0)) < 1e-12);
      }
    }
  }
  SUBCASE("strong depolarisation keeps pairs compatible") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
      const MeasurementTuple t = random_tuple(2, 2, 2, 0.3, seed);
      CHECK(find_joint(t).has_value());  // feasibility SDP as the oracle
    }
  }
  SUBCASE("deterministic per seed") {
    const MeasurementTuple a = random_tuple(2, 3, 2, 0.6, 11);
    const MeasurementTuple b = random_tuple(2, 3, 2, 0.6, 11);
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < 3; ++i)
        CHECK(frobenius_norm(a.measurement(j).effect(i) -
                             b.measurement(j).effect(i)) == 0.0);
  }
}

TEST_CASE("random_post_processing is compatible by construction") {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    const Povm a = random_povm(2, 2, RandomPovmKind::kProjective, seed);
    const Povm b = random_post_processing(a, 3, seed + 100);
    CHECK(validate_povm(b.effects()).ok());
    CHECK(find_joint(MeasurementTuple({a, b})).has_value());
  }
}

TEST_CASE("random_interior_probabilities") {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const auto p = random_interior_probabilities(3, seed);
    double sum = 0.0;
    for (double x : p) {
      CHECK(x > 0.0);
      CHECK(x < 1.0);
      sum += x;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}
