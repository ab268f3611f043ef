#include "jm/conic.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "jm/herm.hpp"

using namespace jm;
using namespace jm::conic;

namespace {

Eigen::MatrixXcd pauli(char w) {
  Eigen::MatrixXcd m(2, 2);
  switch (w) {
    case 'x': m << 0, 1, 1, 0; break;
    case 'y': m << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0); break;
    default: m << 1, 0, 0, -1; break;
  }
  return m;
}

// expr: tr(X) - target == 0
AffineExpr trace_equals(int var, int dim, double target) {
  AffineExpr e = AffineExpr::zero(1);
  Eigen::MatrixXcd c(1, 1);
  c(0, 0) = -target;
  e.constant = Hermitian(c);
  e.add_pairing(var, Hermitian::identity(dim));
  return e;
}

// Busch criterion for a pair of unbiased qubit dichotomic measurements with
// Bloch directions n1, n2: the depolarised pair is compatible iff
// t * (|n1 + n2| + |n1 - n2|) <= 2. Oracle for the derived expectations.
double busch_threshold(const Eigen::Vector3d& n1, const Eigen::Vector3d& n2) {
  return 2.0 / ((n1 + n2).norm() + (n1 - n2).norm());
}

// Feasibility problem for a joint measurement of the depolarised x/z pair,
// assembled directly against the conic contract.
SdpProblem xz_pair_joint_problem(double t) {
  SdpProblem p;
  const Hermitian id = Hermitian::identity(2);
  const Hermitian sx = Hermitian(pauli('x'));
  const Hermitian sz = Hermitian(pauli('z'));
  int m[2][2];
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      m[a][b] = p.add_variable("M" + std::to_string(a) + std::to_string(b), 2);

  auto marginal_eq = [&](int va, int vb, const Hermitian& target) {
    AffineExpr e = AffineExpr::zero(2);
    e.add_scaled(va, 1.0).add_scaled(vb, 1.0);
    e.add_constant(-target);
    p.require_zero(e);
  };
  marginal_eq(m[0][0], m[0][1], (id + sx * t) * 0.5);
  marginal_eq(m[1][0], m[1][1], (id - sx * t) * 0.5);
  marginal_eq(m[0][0], m[1][0], (id + sz * t) * 0.5);
  marginal_eq(m[0][1], m[1][1], (id - sz * t) * 0.5);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      p.require_psd(AffineExpr::zero(2).add_scaled(m[a][b], 1.0));
  return p;
}

}  // namespace

TEST_CASE("top eigenvalue SDP: max tr(sz X), X psd, tr X = 1") {
  SdpProblem p;
  const int x = p.add_variable("X", 2);
  p.require_zero(trace_equals(x, 2, 1.0));
  p.require_psd(AffineExpr::zero(2).add_scaled(x, 1.0));
  p.objective.emplace_back(x, Hermitian(pauli('z')));
  p.maximize = true;

  const SdpSolution sol = solve_sdp(p);
  REQUIRE(sol.status == SdpStatus::kOptimal);
  CHECK(sol.objective_value == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(sol.eq_residual <= 1e-8);
  CHECK(sol.psd_residual >= -1e-8);
}

TEST_CASE("infeasible: X psd with tr X = -1") {
  SdpProblem p;
  const int x = p.add_variable("X", 2);
  p.require_zero(trace_equals(x, 2, -1.0));
  p.require_psd(AffineExpr::zero(2).add_scaled(x, 1.0));

  const SdpSolution sol = solve_sdp(p);
  REQUIRE(sol.status == SdpStatus::kInfeasible);
  REQUIRE(sol.ray.size() == 1);
  CHECK(sol.ray_pairing_residual <= 1e-7);
  CHECK(sol.ray_objective < -1e-9);
  CHECK(min_eigenvalue(sol.ray[0]) >= -1e-9);
}

TEST_CASE("joint feasibility of the depolarised x/z pair at t = 0.5") {
  // 0.5 sits below the Busch threshold, so a joint must exist.
  const double threshold =
      busch_threshold(Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitZ());
  REQUIRE(threshold == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  REQUIRE(0.5 < threshold);

  const SdpSolution sol = solve_sdp(xz_pair_joint_problem(0.5));
  REQUIRE(sol.status == SdpStatus::kOptimal);
  CHECK(sol.eq_residual <= 1e-8);
  CHECK(sol.psd_residual >= -1e-8);
}

TEST_CASE("joint feasibility of the x/z pair above the Busch threshold") {
  const SdpSolution sol = solve_sdp(xz_pair_joint_problem(0.75));
  REQUIRE(sol.status == SdpStatus::kInfeasible);
  CHECK(sol.ray_pairing_residual <= 1e-7);
  CHECK(sol.ray_objective < 0.0);
}

TEST_CASE("unbounded objective is reported with a ray") {
  SdpProblem p;
  const int x = p.add_variable("X", 2);
  p.require_psd(AffineExpr::zero(2).add_scaled(x, 1.0));
  p.objective.emplace_back(x, Hermitian::identity(2));
  p.maximize = true;

  const SdpSolution sol = solve_sdp(p);
  CHECK(sol.status == SdpStatus::kUnbounded);
}

TEST_CASE("complex solve agrees with the direct real formulation") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd c(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) c(i, j) = u(rng);
    c = (0.5 * (c + c.transpose())).eval();

    SdpProblem p;
    const int x = p.add_variable("X", 3);
    p.require_zero(trace_equals(x, 3, 1.0));
    p.require_psd(AffineExpr::zero(3).add_scaled(x, 1.0));
    p.objective.emplace_back(x, Hermitian(c.cast<Complex>()));

    const SdpSolution sol = solve_sdp(p);
    REQUIRE(sol.status == SdpStatus::kOptimal);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
    CHECK(sol.objective_value ==
          doctest::Approx(es.eigenvalues()(2)).epsilon(1e-7));
  }
}

TEST_CASE("positive rescaling of constraints preserves the status") {
  for (double gamma : {2.0, 10.0}) {
    SdpProblem feas = xz_pair_joint_problem(0.5);
    SdpProblem infeas = xz_pair_joint_problem(0.75);
    for (SdpProblem* p : {&feas, &infeas}) {
      for (auto& e : p->equalities) {
        e.constant = e.constant * gamma;
        for (auto& t : e.terms) {
          t.coeff *= gamma;
          if (t.kind != Term::Kind::kScaled) t.op = t.op * gamma;
        }
      }
      for (auto& e : p->psd) {
        e.constant = e.constant * gamma;
        for (auto& t : e.terms) {
          t.coeff *= gamma;
          if (t.kind != Term::Kind::kScaled) t.op = t.op * gamma;
        }
      }
    }
    CHECK(solve_sdp(feas).status == SdpStatus::kOptimal);
    CHECK(solve_sdp(infeas).status == SdpStatus::kInfeasible);
  }
}

TEST_CASE("minimization sense") {
  SdpProblem p;
  const int x = p.add_variable("X", 2);
  p.require_zero(trace_equals(x, 2, 1.0));
  p.require_psd(AffineExpr::zero(2).add_scaled(x, 1.0));
  p.objective.emplace_back(x, Hermitian(pauli('z')));
  p.maximize = false;
  const SdpSolution sol = solve_sdp(p);
  REQUIRE(sol.status == SdpStatus::kOptimal);
  CHECK(sol.objective_value == doctest::Approx(-1.0).epsilon(1e-7));
}

TEST_CASE("malformed problems are rejected") {
  SdpProblem p;
  const int x = p.add_variable("X", 2);
  AffineExpr bad = AffineExpr::zero(3);
  bad.add_scaled(x, 1.0);  // 2x2 variable inside a 3x3 expression
  p.require_psd(bad);
  CHECK_THROWS_AS(solve_sdp(p), std::invalid_argument);
}

TEST_CASE("problem dump lists constraints one per line") {
  SdpProblem p = xz_pair_joint_problem(0.5);
  std::ostringstream os;
  dump_problem(p, os);
  const std::string text = os.str();
  CHECK(text.find("var M00 herm 2") != std::string::npos);
  CHECK(text.find("eq[3]:") != std::string::npos);
  CHECK(text.find("psd[3]:") != std::string::npos);
}
