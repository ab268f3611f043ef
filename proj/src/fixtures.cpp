#include "jm/fixtures.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace jm::fixtures {

namespace {

// Deterministic normals: Box-Muller over the raw mt19937_64 stream, so the
// output is identical across standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  double uniform() {  // [0, 1)
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

  Eigen::MatrixXcd complex_gaussian(int rows, int cols) {
    Eigen::MatrixXcd m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = Complex(normal(), normal());
    return m;
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

int sign_of_outcome(int outcome) { return outcome == 0 ? 1 : -1; }

Eigen::MatrixXcd bloch(double a, double b, double c) {
  return a * pauli('x').mat() + b * pauli('y').mat() + c * pauli('z').mat();
}

Hermitian inv_sqrt_of(const Hermitian& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(s.mat());
  return Hermitian(es.eigenvectors() *
                   es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                   es.eigenvectors().adjoint());
}

}  // namespace

double inv_sqrt2() {
  static const double v = 1.0 / std::sqrt(2.0);
  return v;
}

double inv_sqrt3() {
  static const double v = 1.0 / std::sqrt(3.0);
  return v;
}

double t_star() { return inv_sqrt3(); }

Hermitian pauli(char w) {
  Eigen::MatrixXcd m(2, 2);
  switch (w) {
    case 'x': m << 0, 1, 1, 0; break;
    case 'y': m << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0); break;
    case 'z': m << 1, 0, 0, -1; break;
    default: throw std::invalid_argument("pauli: expected x, y or z");
  }
  return Hermitian(m);
}

Povm pauli_povm(char w) {
  const Hermitian s = pauli(w);
  const Hermitian id = Hermitian::identity(2);
  return Povm({(id + s) * 0.5, (id - s) * 0.5});
}

MeasurementTuple pauli_triple() {
  return MeasurementTuple({pauli_povm('x'), pauli_povm('y'), pauli_povm('z')});
}

MeasurementTuple pauli_pair_xz() {
  return MeasurementTuple({pauli_povm('x'), pauli_povm('z')});
}

MeasurementTuple example2_tuple() {
  const Hermitian id = Hermitian::identity(2);
  const Povm first({id, Hermitian::zero(2)});
  const Povm second({id * 0.5, id * 0.5});
  return MeasurementTuple({first, second});
}

MeasurementTuple trivial_coins(const std::vector<double>& p,
                               const std::vector<double>& q, int dim) {
  auto trivial = [&](const std::vector<double>& v) {
    if (v.empty()) throw std::invalid_argument("trivial_coins: empty vector");
    double sum = 0.0;
    for (double x : v) {
      if (x < 0.0) throw std::invalid_argument("trivial_coins: negative entry");
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw std::invalid_argument("trivial_coins: probabilities must sum to 1");
    }
    std::vector<Hermitian> effects;
    effects.reserve(v.size());
    for (double x : v) effects.push_back(Hermitian::identity(dim) * x);
    return Povm(std::move(effects));
  };
  return MeasurementTuple({trivial(p), trivial(q)});
}

JointMeasurement central_joint_tstar() {
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(2, 2);
  std::vector<Hermitian> effects;
  const std::vector<int> counts{2, 2, 2};
  for (int flat = 0; flat < 8; ++flat) {
    const auto multi = JointMeasurement::multi_index(counts, flat);
    const double a = sign_of_outcome(multi[0]);
    const double b = sign_of_outcome(multi[1]);
    const double c = sign_of_outcome(multi[2]);
    effects.push_back(
        Hermitian((id + inv_sqrt3() * bloch(a, b, c)) / 8.0));
  }
  return JointMeasurement(counts, std::move(effects));
}

JointMeasurement sic_joint(int sign) {
  if (sign != 1 && sign != -1) {
    throw std::invalid_argument("sic_joint: sign must be +1 or -1");
  }
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(2, 2);
  const std::vector<int> counts{2, 2, 2};
  std::vector<Hermitian> effects;
  for (int flat = 0; flat < 8; ++flat) {
    const auto multi = JointMeasurement::multi_index(counts, flat);
    const int a = sign_of_outcome(multi[0]);
    const int b = sign_of_outcome(multi[1]);
    const int c = sign_of_outcome(multi[2]);
    // adding D^(sign) with blocks sign*abc*M_abc doubles the central effect
    // on the cells with abc == sign and kills the rest
    if (a * b * c == sign) {
      effects.push_back(Hermitian((id + inv_sqrt3() * bloch(a, b, c)) / 4.0));
    } else {
      effects.push_back(Hermitian::zero(2));
    }
  }
  return JointMeasurement(counts, std::move(effects));
}

namespace {

Povm dichotomic_bloch(double nx, double ny, double nz) {
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(2, 2);
  return Povm({Hermitian((id + bloch(nx, ny, nz)) * 0.5),
               Hermitian((id - bloch(nx, ny, nz)) * 0.5)});
}

}  // namespace

MeasurementTuple paper_b_tuple() {
  // B1 = B3 = dichotomic along (x+z)/sqrt(2) depolarised to sqrt(2/3), which
  // lands the Bloch vector at (x+z)/sqrt(3); B2 is the depolarised Pauli y.
  const Povm b1 = dichotomic_bloch(inv_sqrt3(), 0.0, inv_sqrt3());
  const Povm b2 = dichotomic_bloch(0.0, inv_sqrt3(), 0.0);
  return MeasurementTuple({b1, b2, b1});
}

MeasurementTuple paper_c_tuple() {
  const Povm c1 = dichotomic_bloch(inv_sqrt3(), 0.0, -inv_sqrt3());
  const Povm c2 = dichotomic_bloch(0.0, inv_sqrt3(), 0.0);
  const Povm c3 = dichotomic_bloch(-inv_sqrt3(), 0.0, inv_sqrt3());
  return MeasurementTuple({c1, c2, c3});
}

Fixture make_fixture(const std::string& name, const std::vector<double>& p,
                     const std::vector<double>& q) {
  if (name == "pauli-triple") return pauli_triple();
  if (name == "pauli-pair-xz") return pauli_pair_xz();
  if (name == "example-2") return example2_tuple();
  if (name == "trivial-coins") return trivial_coins(p, q);
  if (name == "sic-joint-plus") return sic_joint(+1);
  if (name == "sic-joint-minus") return sic_joint(-1);
  if (name == "central-joint-tstar") return central_joint_tstar();
  if (name == "paper-B") return paper_b_tuple();
  if (name == "paper-C") return paper_c_tuple();
  throw std::invalid_argument("unknown fixture: " + name);
}

std::vector<std::string> fixture_names() {
  return {"pauli-triple",   "pauli-pair-xz",     "example-2",
          "trivial-coins",  "sic-joint-plus",    "sic-joint-minus",
          "central-joint-tstar", "paper-B",      "paper-C"};
}

Povm random_povm(int dim, int n_outcomes, RandomPovmKind kind, uint64_t seed) {
  if (dim < 1 || n_outcomes < 1) {
    throw std::invalid_argument("random_povm: dim >= 1 and n >= 1");
  }
  Rng rng(seed);

  if (kind == RandomPovmKind::kProjective) {
    if (n_outcomes > dim) {
      throw std::invalid_argument(
          "random_povm: projective kind requires n <= dim");
    }
    // Haar-ish unitary from the QR of a complex Gaussian, phases fixed.
    const Eigen::MatrixXcd g = rng.complex_gaussian(dim, dim);
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
    Eigen::MatrixXcd qmat = qr.householderQ();
    const Eigen::MatrixXcd rmat = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < dim; ++i) {
      const Complex rd = rmat(i, i);
      if (std::abs(rd) > 0) qmat.col(i) *= rd / std::abs(rd);
    }
    std::vector<Hermitian> effects;
    for (int i = 0; i < n_outcomes; ++i) {
      Eigen::MatrixXcd proj = Eigen::MatrixXcd::Zero(dim, dim);
      if (i < n_outcomes - 1) {
        proj = qmat.col(i) * qmat.col(i).adjoint();
      } else {
        for (int k = i; k < dim; ++k) proj += qmat.col(k) * qmat.col(k).adjoint();
      }
      effects.push_back(Hermitian(proj));
    }
    return Povm(std::move(effects));
  }

  std::vector<Hermitian> gs;
  Hermitian sum = Hermitian::zero(dim);
  for (int i = 0; i < n_outcomes; ++i) {
    Eigen::MatrixXcd x = (kind == RandomPovmKind::kFullRank)
                             ? rng.complex_gaussian(dim, dim)
                             : rng.complex_gaussian(dim, 1);
    Hermitian g(x * x.adjoint());
    sum += g;
    gs.push_back(std::move(g));
  }
  const Hermitian isq = inv_sqrt_of(sum);
  std::vector<Hermitian> effects;
  effects.reserve(gs.size());
  for (const auto& g : gs)
    effects.push_back(Hermitian(isq.mat() * g.mat() * isq.mat()));
  return Povm(std::move(effects));
}

MeasurementTuple random_tuple(int dim, int n_outcomes, int m, double visibility,
                              uint64_t seed) {
  if (m < 1) throw std::invalid_argument("random_tuple: m >= 1");
  if (visibility < 0.0 || visibility > 1.0) {
    throw std::invalid_argument("random_tuple: visibility in [0, 1]");
  }
  std::vector<Povm> ms;
  ms.reserve(m);
  for (int j = 0; j < m; ++j) {
    const uint64_t sub_seed = seed * 1000003ULL + static_cast<uint64_t>(j);
    ms.push_back(depolarize(
        random_povm(dim, n_outcomes, RandomPovmKind::kFullRank, sub_seed),
        visibility));
  }
  return MeasurementTuple(std::move(ms));
}

Povm random_post_processing(const Povm& a, int n_outcomes, uint64_t seed) {
  if (n_outcomes < 1) throw std::invalid_argument("n_outcomes >= 1");
  Rng rng(seed);
  std::vector<Hermitian> effects(n_outcomes, Hermitian::zero(a.dim()));
  for (int i = 0; i < a.n_outcomes(); ++i) {
    std::vector<double> row(n_outcomes);
    double sum = 0.0;
    for (double& x : row) {
      x = -std::log(1.0 - rng.uniform());
      sum += x;
    }
    for (int j = 0; j < n_outcomes; ++j)
      effects[j] += a.effect(i) * (row[j] / sum);
  }
  return Povm(std::move(effects));
}

std::vector<double> random_interior_probabilities(int n, uint64_t seed) {
  if (n < 2) throw std::invalid_argument("need at least two outcomes");
  Rng rng(seed);
  std::vector<double> v(n);
  double sum = 0.0;
  for (double& x : v) {
    x = 0.05 + (-std::log(1.0 - rng.uniform()));
    sum += x;
  }
  for (double& x : v) x /= sum;
  return v;
}

}  // namespace jm::fixtures
