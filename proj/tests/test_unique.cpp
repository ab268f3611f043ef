#include "jm/unique.hpp"

#include <cmath>

#include "doctest.h"
#include "jm/fixtures.hpp"

using namespace jm;
using fixtures::inv_sqrt3;

namespace {

// D+ direction of the worked example: blocks abc * M_abc over the central
// joint, flattened for angle comparisons.
std::vector<Hermitian> dplus_direction() {
  const JointMeasurement c = fixtures::central_joint_tstar();
  std::vector<Hermitian> blocks;
  for (int flat = 0; flat < 8; ++flat) {
    const auto multi = JointMeasurement::multi_index({2, 2, 2}, flat);
    const int a = multi[0] == 0 ? 1 : -1;
    const int b = multi[1] == 0 ? 1 : -1;
    const int cc = multi[2] == 0 ? 1 : -1;
    blocks.push_back(c.effect(flat) * static_cast<double>(a * b * cc));
  }
  return blocks;
}

double frobenius_angle_to(const MarginalPerturbation& d,
                          const std::vector<Hermitian>& line) {
  double dot = 0.0, nd = 0.0, nl = 0.0;
  for (size_t i = 0; i < line.size(); ++i) {
    dot += frobenius_inner(d.block(static_cast<int>(i)), line[i]);
    nd += std::pow(frobenius_norm(d.block(static_cast<int>(i))), 2);
    nl += std::pow(frobenius_norm(line[i]), 2);
  }
  const double cosine =
      std::min(1.0, std::abs(dot) / std::sqrt(nd) / std::sqrt(nl));
  return std::acos(cosine);
}

JointMeasurement example2_joint() {
  const Hermitian half = Hermitian::identity(2) * 0.5;
  return JointMeasurement({2, 2},
                          {half, half, Hermitian::zero(2), Hermitian::zero(2)});
}

}  // namespace

TEST_CASE("find_marginal_perturbation") {
  SUBCASE("central joint: witness collinear with the D+ line") {
    for (bool precheck : {true, false}) {
      const auto d = find_marginal_perturbation(fixtures::central_joint_tstar(),
                                                precheck);
      REQUIRE(d.has_value());
      CHECK(frobenius_angle_to(*d, dplus_direction()) < 1e-5);
      CHECK_NOTHROW(add_perturbation(fixtures::central_joint_tstar(), *d));
    }
  }
  SUBCASE("the forced joint of the example pair admits none") {
    CHECK_FALSE(find_marginal_perturbation(example2_joint()).has_value());
    CHECK_FALSE(find_marginal_perturbation(example2_joint(), false).has_value());
  }
  SUBCASE("product joint of uniform coins: checkerboard witness") {
    const JointMeasurement m =
        product_joint_trivial({{0.5, 0.5}, {0.5, 0.5}}, 2);
    const auto d = find_marginal_perturbation(m);
    REQUIRE(d.has_value());
    const Hermitian& h = d->block(0);
    CHECK(frobenius_norm(h) > 1e-6);
    CHECK(frobenius_norm(d->block(3) - h) < 1e-8);
    CHECK(frobenius_norm(d->block(1) + h) < 1e-8);
    CHECK(frobenius_norm(d->block(2) + h) < 1e-8);
  }
}

TEST_CASE("symmetric_perturbation_precheck") {
  SUBCASE("central joint direction lives inside the supports") {
    const JointMeasurement c = fixtures::central_joint_tstar();
    // oracle: abc * M_abc is supported in support(M_abc) by construction;
    // check the projector identity on each cell
    for (int flat = 0; flat < 8; ++flat) {
      const Eigen::MatrixXcd v = support_basis(c.effect(flat));
      const Eigen::MatrixXcd proj = v * v.adjoint();
      const Eigen::MatrixXcd d = dplus_direction()[flat].mat();
      CHECK((proj * d * proj - d).norm() < 1e-12);
    }
    CHECK(symmetric_perturbation_precheck(c).has_value());
  }
  SUBCASE("example-2 joint: zero supports pin everything") {
    CHECK_FALSE(symmetric_perturbation_precheck(example2_joint()).has_value());
  }
  SUBCASE("full-rank joint with trivial marginals has d^2 free directions") {
    const JointMeasurement m =
        product_joint_trivial({{0.5, 0.5}, {0.5, 0.5}}, 2);
    // oracle: assemble the marginal-zero system over all 16 block
    // coordinates independently and count its nullity
    const HermitianBasis basis = hermitian_basis(2);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(4 * 4, 16);
    int row = 0;
    for (int party = 0; party < 2; ++party) {
      for (int outcome = 0; outcome < 2; ++outcome) {
        for (int flat = 0; flat < 4; ++flat) {
          if (JointMeasurement::multi_index({2, 2}, flat)[party] == outcome) {
            for (int s = 0; s < 4; ++s) a(row + s, 4 * flat + s) = 1.0;
          }
        }
        row += 4;
      }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const int rank =
        (svd.singularValues().array() > 1e-9 * svd.singularValues()(0)).count();
    CHECK(16 - rank == 4);
    CHECK(symmetric_perturbation_precheck(m).has_value());
  }
}

TEST_CASE("joint_uniqueness") {
  SUBCASE("example-2 tuple is unique") {
    const UniquenessVerdict v = joint_uniqueness(fixtures::example2_tuple());
    CHECK(v.verdict == Verdict::kUnique);
    CHECK(v.max_objective_seen <= kEpsUnique);
    CHECK_FALSE(v.witness.has_value());
  }
  SUBCASE("depolarised Pauli triple is non-unique with a sound witness") {
    const MeasurementTuple t = depolarize(fixtures::pauli_triple(), inv_sqrt3());
    const UniquenessVerdict v = joint_uniqueness(t);
    REQUIRE(v.verdict == Verdict::kNonUnique);
    REQUIRE(v.witness.has_value());
    CHECK(frobenius_norm(*v.witness) >= kEpsUnique);
    REQUIRE(v.second_joint.has_value());
    CHECK(verify_joint(*v.second_joint, t).ok);
  }
  SUBCASE("non-deterministic trivial pair is non-unique") {
    const MeasurementTuple t =
        fixtures::trivial_coins({0.5, 0.5}, {1.0 / 3.0, 2.0 / 3.0});
    const UniquenessVerdict v = joint_uniqueness(t);
    CHECK(v.verdict == Verdict::kNonUnique);
    REQUIRE(v.second_joint.has_value());
    CHECK(verify_joint(*v.second_joint, t).ok);
  }
  SUBCASE("incompatible input throws") {
    CHECK_THROWS_AS(joint_uniqueness(fixtures::pauli_pair_xz()),
                    IncompatibleTuple);
  }
}

TEST_CASE("joint_set_affine_dimension") {
  CHECK(joint_set_affine_dimension(fixtures::example2_tuple()) == 0);
  CHECK(joint_set_affine_dimension(
            depolarize(fixtures::pauli_triple(), inv_sqrt3())) == 1);
  CHECK(joint_set_affine_dimension(
            fixtures::trivial_coins({0.5, 0.5}, {0.5, 0.5})) == 4);
}

TEST_CASE("tuple_extremal_jm") {
  SUBCASE("example-2 is unique but not extremal") {
    CHECK_FALSE(tuple_extremal_jm(fixtures::example2_tuple()));
  }
  SUBCASE("two copies of a projective measurement are extremal") {
    const MeasurementTuple t(
        {fixtures::pauli_povm('z'), fixtures::pauli_povm('z')});
    // derived: the unique joint is the projective diagonal one
    const auto m = find_joint(t);
    REQUIRE(m.has_value());
    CHECK(is_projective(m->as_povm()));
    CHECK(tuple_extremal_jm(t));
  }
  SUBCASE("depolarised Pauli triple is not extremal in the compatible set") {
    CHECK_FALSE(
        tuple_extremal_jm(depolarize(fixtures::pauli_triple(), inv_sqrt3())));
  }
}

TEST_CASE("uniqueness implies boundary of the compatible set") {
  CHECK(tuple_boundary_jm(fixtures::example2_tuple()));
  const MeasurementTuple t(
      {fixtures::pauli_povm('z'), fixtures::pauli_povm('z')});
  CHECK(tuple_boundary_jm(t));
}

TEST_CASE("pairs with a projective member are always unique") {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    const Povm a =
        fixtures::random_povm(2, 2, fixtures::RandomPovmKind::kProjective, seed);
    const Povm b = fixtures::random_post_processing(a, 2, seed + 1000);
    const UniquenessVerdict v = joint_uniqueness(MeasurementTuple({a, b}));
    CHECK(v.verdict == Verdict::kUnique);
  }
}

TEST_CASE("non-unique verdicts come with at least one affine direction") {
  for (uint64_t seed = 0; seed < 3; ++seed) {
    const MeasurementTuple t = fixtures::random_tuple(2, 2, 2, 0.3, seed);
    const UniquenessVerdict v = joint_uniqueness(t);
    if (v.verdict == Verdict::kNonUnique) {
      CHECK(joint_set_affine_dimension(t) >= 1);
      // midpoints of distinct joints are joints
      const JointMeasurement base = max_min_eig_joint(t).joint;
      std::vector<Hermitian> mid;
      for (int i = 0; i < base.n_effects(); ++i) {
        mid.push_back((base.effect(i) + v.second_joint->effect(i)) * 0.5);
      }
      const JointMeasurement midpoint(base.outcome_counts(), std::move(mid));
      CHECK(verify_joint(midpoint, t).ok);
    }
  }
}
