#include "jm/povm.hpp"

#include <cmath>

#include "doctest.h"
#include "jm/fixtures.hpp"

using namespace jm;
using fixtures::pauli;
using fixtures::pauli_povm;

namespace {

Povm coin() {
  const Hermitian half = Hermitian::identity(2) * 0.5;
  return Povm({half, half});
}

// qubit SIC tetrahedron: four rank-1 effects (identity + direction)/4
Povm sic_tetrahedron() {
  const double s = fixtures::inv_sqrt3();
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(2, 2);
  auto effect = [&](double a, double b, double c) {
    return Hermitian((id + s * (a * pauli('x').mat() + b * pauli('y').mat() +
                                c * pauli('z').mat())) /
                     4.0);
  };
  return Povm({effect(1, 1, 1), effect(1, -1, -1), effect(-1, 1, -1),
               effect(-1, -1, 1)});
}

}  // namespace

TEST_CASE("validate_povm examples") {
  const Hermitian id = Hermitian::identity(2);
  const Hermitian sx = pauli('x');
  const Hermitian sz = pauli('z');

  SUBCASE("valid dichotomic pair") {
    const auto val = validate_povm({(id + sx) * 0.5, (id - sx) * 0.5});
    CHECK(val.ok());
  }
  SUBCASE("normalization violation reports the Frobenius residual") {
    const auto val = validate_povm({id, id});
    REQUIRE_FALSE(val.ok());
    REQUIRE(val.violations.size() == 1);
    CHECK(val.violations[0].what == "effects do not sum to identity");
    CHECK(val.violations[0].residual ==
          doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  }
  SUBCASE("PSD violation names the effect and eigenvalue") {
    const auto val = validate_povm({sz, id - sz});
    REQUIRE_FALSE(val.ok());
    REQUIRE(val.violations.size() == 1);
    CHECK(val.violations[0].effect == 0);
    CHECK(val.violations[0].residual == doctest::Approx(-1.0).epsilon(1e-12));
  }
}

TEST_CASE("depolarize") {
  const Povm ax = pauli_povm('x');
  SUBCASE("t = 1 is the identity map") {
    const Povm out = depolarize(ax, 1.0);
    for (int i = 0; i < 2; ++i)
      CHECK(frobenius_norm(out.effect(i) - ax.effect(i)) < 1e-14);
  }
  SUBCASE("t = 0 yields the trivial counterpart") {
    const Povm out = depolarize(ax, 0.0);
    for (int i = 0; i < 2; ++i)
      CHECK(frobenius_norm(out.effect(i) - Hermitian::identity(2) * 0.5) <
            1e-14);
  }
  SUBCASE("t = 1/sqrt(3) on the Pauli z measurement") {
    const Povm out = depolarize(pauli_povm('z'), fixtures::inv_sqrt3());
    const Hermitian expected0(
        (Eigen::MatrixXcd::Identity(2, 2) + fixtures::inv_sqrt3() * pauli('z').mat()) *
        0.5);
    CHECK(frobenius_norm(out.effect(0) - expected0) < 1e-14);
  }
  SUBCASE("t outside [0,1] is rejected") {
    CHECK_THROWS_AS(depolarize(ax, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(depolarize(ax, 1.1), std::invalid_argument);
  }
  SUBCASE("t > 1 with the probe flag revalidates") {
    CHECK_THROWS_AS(depolarize(ax, 1.1, true), std::invalid_argument);
    const Povm trivial = coin();
    CHECK_NOTHROW(depolarize(trivial, 1.1, true));  // stays a POVM
  }
}

TEST_CASE("trivial_counterpart") {
  SUBCASE("Pauli x") {
    const auto [trivial, diff] = trivial_counterpart(pauli_povm('x'));
    CHECK(frobenius_norm(trivial.effect(0) - Hermitian::identity(2) * 0.5) <
          1e-14);
    CHECK(frobenius_norm(diff.blocks()[0] - pauli('x') * (-0.5)) < 1e-14);
    CHECK(frobenius_norm(diff.blocks()[1] - pauli('x') * 0.5) < 1e-14);
  }
  SUBCASE("already trivial POVM maps to itself") {
    const Povm p({Hermitian::identity(2), Hermitian::zero(2)});
    const auto [trivial, diff] = trivial_counterpart(p);
    CHECK(frobenius_norm(trivial.effect(0) - p.effect(0)) < 1e-14);
    CHECK(frobenius_norm(diff) < 1e-14);
  }
  SUBCASE("depolarisation is the perturbation scaled by 1 - t") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
      const Povm a =
          fixtures::random_povm(2, 3, fixtures::RandomPovmKind::kFullRank, seed);
      const auto [trivial, diff] = trivial_counterpart(a);
      for (double t : {0.0, 0.3, 0.8, 1.0}) {
        const Povm dep = depolarize(a, t);
        for (int i = 0; i < a.n_outcomes(); ++i) {
          const Hermitian expected = a.effect(i) + diff.blocks()[i] * (1.0 - t);
          CHECK(frobenius_norm(dep.effect(i) - expected) < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("is_projective") {
  CHECK(is_projective(pauli_povm('z')));
  CHECK_FALSE(is_projective(coin()));
  CHECK_FALSE(is_projective(sic_tetrahedron()));
}

TEST_CASE("is_extremal_povm") {
  SUBCASE("projective measurements are extremal") {
    CHECK(is_extremal_povm(pauli_povm('z')).extremal);
  }
  SUBCASE("the coin is not, with a valid symmetric witness") {
    const auto res = is_extremal_povm(coin());
    REQUIRE_FALSE(res.extremal);
    REQUIRE(res.witness.has_value());
    std::vector<Hermitian> plus, minus;
    for (int i = 0; i < 2; ++i) {
      plus.push_back(coin().effect(i) + res.witness->blocks()[i]);
      minus.push_back(coin().effect(i) - res.witness->blocks()[i]);
    }
    CHECK(validate_povm(plus).ok());
    CHECK(validate_povm(minus).ok());
    // witness scaled to touch the boundary: some perturbed effect is singular
    double margin = 1.0;
    for (const auto& e : plus) margin = std::min(margin, min_eigenvalue(e));
    for (const auto& e : minus) margin = std::min(margin, min_eigenvalue(e));
    CHECK(margin == doctest::Approx(0.0).epsilon(1e-9));
  }
  SUBCASE("SIC tetrahedron is extremal, matching the Gram-matrix oracle") {
    const Povm sic = sic_tetrahedron();
    Eigen::MatrixXd gram(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        gram(i, j) = frobenius_inner(sic.effect(i), sic.effect(j));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(gram);
    const int rank =
        (svd.singularValues().array() > 1e-9 * svd.singularValues()(0)).count();
    REQUIRE(rank == 4);  // effects linearly independent in Herm(2)
    CHECK(is_extremal_povm(sic).extremal);
  }
  SUBCASE("more than d^2 non-null effects is never extremal") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
      const Povm a =
          fixtures::random_povm(2, 5, fixtures::RandomPovmKind::kFullRank, seed);
      CHECK_FALSE(is_extremal_povm(a).extremal);
    }
  }
  SUBCASE("witness keeps both signs valid on random non-extremal inputs") {
    for (uint64_t seed = 10; seed < 15; ++seed) {
      const Povm a =
          fixtures::random_povm(2, 3, fixtures::RandomPovmKind::kFullRank, seed);
      const auto res = is_extremal_povm(a);
      REQUIRE_FALSE(res.extremal);  // full-rank effects always admit one
      std::vector<Hermitian> plus, minus;
      for (int i = 0; i < a.n_outcomes(); ++i) {
        plus.push_back(a.effect(i) + res.witness->blocks()[i]);
        minus.push_back(a.effect(i) - res.witness->blocks()[i]);
      }
      CHECK(validate_povm(plus).ok());
      CHECK(validate_povm(minus).ok());
    }
  }
}

TEST_CASE("is_boundary_povm") {
  CHECK_FALSE(is_boundary_povm(coin()));
  CHECK(is_boundary_povm(pauli_povm('x')));
  CHECK(is_boundary_povm(Povm({Hermitian::identity(2), Hermitian::zero(2)})));
}

TEST_CASE("tuple extremality and boundary are componentwise") {
  const Povm ax = pauli_povm('x');
  const Povm az = pauli_povm('z');
  const Povm flat = coin();
  const Povm det({Hermitian::identity(2), Hermitian::zero(2)});

  CHECK(tuple_is_extremal(MeasurementTuple({ax, az})));
  CHECK_FALSE(tuple_is_extremal(MeasurementTuple({ax, flat})));
  CHECK_FALSE(tuple_is_extremal(MeasurementTuple({depolarize(ax, 0.9), az})));

  CHECK(tuple_is_boundary(MeasurementTuple({det, flat})));
  CHECK_FALSE(tuple_is_boundary(MeasurementTuple({flat, flat})));
  CHECK_FALSE(tuple_is_boundary(
      MeasurementTuple({depolarize(ax, 0.5), depolarize(az, 0.5)})));
}

TEST_CASE("relabel") {
  const Povm det({Hermitian::identity(2), Hermitian::zero(2)});
  SUBCASE("identity permutation") {
    const Povm out = relabel(det, {0, 1});
    CHECK(frobenius_norm(out.effect(0) - det.effect(0)) == 0.0);
  }
  SUBCASE("swap") {
    const Povm out = relabel(det, {1, 0});
    CHECK(frobenius_norm(out.effect(0)) == 0.0);
    CHECK(frobenius_norm(out.effect(1) - Hermitian::identity(2)) == 0.0);
  }
  SUBCASE("double swap restores") {
    const Povm out = relabel(relabel(det, {1, 0}), {1, 0});
    for (int i = 0; i < 2; ++i)
      CHECK(frobenius_norm(out.effect(i) - det.effect(i)) == 0.0);
  }
  SUBCASE("invalid permutations are rejected") {
    CHECK_THROWS_AS(relabel(det, {0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(relabel(det, {0}), std::invalid_argument);
    CHECK_THROWS_AS(relabel(det, {0, 2}), std::invalid_argument);
  }
}

TEST_CASE("depolarize preserves validity and effect traces") {
  for (uint64_t seed = 20; seed < 26; ++seed) {
    const Povm a =
        fixtures::random_povm(3, 4, fixtures::RandomPovmKind::kFullRank, seed);
    for (double t : {0.0, 0.25, 0.75, 1.0}) {
      const Povm dep = depolarize(a, t);
      CHECK(validate_povm(dep.effects()).ok());
      for (int i = 0; i < a.n_outcomes(); ++i) {
        CHECK(dep.effect(i).mat().trace().real() ==
              doctest::Approx(a.effect(i).mat().trace().real()).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("perturbation type enforces the zero-sum invariant") {
  const Hermitian sz = pauli('z');
  CHECK_NOTHROW(Perturbation({sz * 0.5, sz * (-0.5)}));
  CHECK_THROWS_AS(Perturbation({sz * 0.5, sz * 0.5}), std::invalid_argument);
}
