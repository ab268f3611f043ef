#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "jm/herm.hpp"

namespace jm::conic {

// One term of an operator-valued affine expression in the SDP variables.
struct Term {
  enum class Kind {
    kScaled,         // coeff * X_v, dim(v) == expression dim
    kScalarTimesOp,  // X_v * op with X_v a 1x1 slot, dim(op) == expression dim
    kPairing,        // tr(op * X_v), expression dim == 1
    kConjugated,     // coeff * V X_v V^dag, V of shape (expression dim, dim(v))
  };
  Kind kind = Kind::kScaled;
  int var = -1;
  double coeff = 1.0;
  Hermitian op;              // used by kScalarTimesOp and kPairing
  Eigen::MatrixXcd conj_map;  // used by kConjugated
};

// value = constant + sum of terms; Hermitian-operator-valued, affine in the
// variables.
struct AffineExpr {
  int dim = 0;
  Hermitian constant;
  std::vector<Term> terms;

  static AffineExpr zero(int dim);
  AffineExpr& add_scaled(int var, double coeff);
  AffineExpr& add_scalar_times_op(int var, const Hermitian& op);
  AffineExpr& add_pairing(int var, const Hermitian& op);
  AffineExpr& add_conjugated(int var, const Eigen::MatrixXcd& v,
                             double coeff = 1.0);
  AffineExpr& add_constant(const Hermitian& c);
};

// Linear objective over a tuple of Hermitian matrix variables subject to
// affine equality constraints (expr == 0) and PSD constraints (expr >= 0).
struct SdpProblem {
  std::vector<std::pair<std::string, int>> variables;  // (name, dim)
  std::vector<AffineExpr> equalities;
  std::vector<AffineExpr> psd;
  std::vector<std::pair<int, Hermitian>> objective;  // sum of tr(K * X_v)
  bool maximize = true;

  int add_variable(const std::string& name, int dim);
  void require_psd(AffineExpr e) { psd.push_back(std::move(e)); }
  void require_zero(AffineExpr e) { equalities.push_back(std::move(e)); }
};

enum class SdpStatus { kOptimal, kInfeasible, kUnbounded, kNumericalFailure };

std::string to_string(SdpStatus s);

struct SdpSolution {
  SdpStatus status = SdpStatus::kNumericalFailure;
  std::vector<Hermitian> values;  // one per variable when kOptimal
  double objective_value = 0.0;

  // Certified on the original problem statement.
  double eq_residual = 0.0;   // max Frobenius violation among equalities
  double psd_residual = 0.0;  // min eigenvalue over all PSD constraints

  // Dual improving ray when kInfeasible: one PSD multiplier per PSD
  // constraint, unit total trace; pairing residual is the maximal leak of
  // the ray along feasible directions, ray_objective its strictly negative
  // value against the constraint constants.
  std::vector<Hermitian> ray;
  double ray_pairing_residual = 0.0;
  double ray_objective = 0.0;

  int iterations = 0;
  std::string message;
};

struct SdpSettings {
  double eps_eq = 1e-8;
  double eps_psd = 1e-8;
  int max_iters = 100;
  std::string dump_path;  // empty: no dump (falls back to process default)
};

SdpSolution solve_sdp(const SdpProblem& problem,
                      const SdpSettings& settings = {});

// Debug text format, one constraint per line, matrices in the repo JSON
// encoding.
void dump_problem(const SdpProblem& problem, std::ostream& os);

// Process-wide dump sink used when SdpSettings::dump_path is empty
// (CLI --dump-sdp). Pass an empty string to disable.
void set_default_dump_path(const std::string& path);

}  // namespace jm::conic
