#include "jm/json_io.hpp"

#include <fstream>
#include <stdexcept>

namespace jm::io {

using nlohmann::json;

json to_json(const Hermitian& h) {
  json rows = json::array();
  for (int i = 0; i < h.dim(); ++i) {
    json row = json::array();
    for (int j = 0; j < h.dim(); ++j) {
      row.push_back({h.mat()(i, j).real(), h.mat()(i, j).imag()});
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Hermitian hermitian_from_json(const json& j) {
  if (!j.is_array() || j.empty()) {
    throw std::invalid_argument("matrix: expected a non-empty array of rows");
  }
  const int d = static_cast<int>(j.size());
  Eigen::MatrixXcd m(d, d);
  for (int i = 0; i < d; ++i) {
    const json& row = j.at(i);
    if (!row.is_array() || static_cast<int>(row.size()) != d) {
      throw std::invalid_argument("matrix: rows must have length dim");
    }
    for (int k = 0; k < d; ++k) {
      const json& cell = row.at(k);
      if (!cell.is_array() || cell.size() != 2) {
        throw std::invalid_argument("matrix: entries are [re, im] pairs");
      }
      m(i, k) = Complex(cell.at(0).get<double>(), cell.at(1).get<double>());
    }
  }
  // reject wildly non-Hermitian input instead of silently symmetrizing it
  if ((m - m.adjoint()).norm() > 1e-8 * std::max(1.0, m.norm())) {
    throw std::invalid_argument("matrix: not Hermitian within tolerance");
  }
  return Hermitian(m);
}

json to_json(const Povm& p) {
  json effects = json::array();
  for (const auto& e : p.effects()) effects.push_back(to_json(e));
  return json{{"dim", p.dim()}, {"effects", std::move(effects)}};
}

Povm povm_from_json(const json& j, double tol) {
  const int dim = j.at("dim").get<int>();
  std::vector<Hermitian> effects;
  for (const auto& e : j.at("effects")) {
    effects.push_back(hermitian_from_json(e));
    if (effects.back().dim() != dim) {
      throw std::invalid_argument("povm: effect dimension mismatch");
    }
  }
  PovmValidation val = validate_povm(effects, tol);
  if (!val.ok()) {
    std::string msg = "povm:";
    for (const auto& v : val.violations) {
      msg += " " + v.what;
      if (v.effect >= 0) msg += " (effect " + std::to_string(v.effect + 1) + ")";
      msg += " residual " + std::to_string(v.residual) + ";";
    }
    throw std::invalid_argument(msg);
  }
  return *std::move(val.povm);
}

json to_json(const MeasurementTuple& t) {
  json ms = json::array();
  for (const auto& m : t.measurements()) ms.push_back(to_json(m));
  return json{{"dim", t.dim()}, {"measurements", std::move(ms)}};
}

MeasurementTuple tuple_from_json(const json& j, double tol) {
  const int dim = j.at("dim").get<int>();
  std::vector<Povm> ms;
  for (const auto& m : j.at("measurements")) {
    ms.push_back(povm_from_json(m, tol));
    if (ms.back().dim() != dim) {
      throw std::invalid_argument("tuple: measurement dimension mismatch");
    }
  }
  return MeasurementTuple(std::move(ms));
}

json to_json(const JointMeasurement& m) {
  json effects = json::array();
  for (const auto& e : m.effects()) effects.push_back(to_json(e));
  return json{{"dim", m.dim()},
              {"outcomes", m.outcome_counts()},
              {"effects", std::move(effects)}};
}

JointMeasurement joint_from_json(const json& j, double tol) {
  const int dim = j.at("dim").get<int>();
  const std::vector<int> counts = j.at("outcomes").get<std::vector<int>>();
  std::vector<Hermitian> effects;
  for (const auto& e : j.at("effects")) {
    effects.push_back(hermitian_from_json(e));
    if (effects.back().dim() != dim) {
      throw std::invalid_argument("joint: effect dimension mismatch");
    }
  }
  return JointMeasurement(counts, std::move(effects), tol);
}

json to_json(const MarginalPerturbation& d) {
  json effects = json::array();
  for (const auto& e : d.blocks()) effects.push_back(to_json(e));
  return json{{"dim", d.dim()},
              {"outcomes", d.outcome_counts()},
              {"effects", std::move(effects)}};
}

json to_json(const Decomposition& d) {
  return json{{"plus", to_json(d.plus)},
              {"minus", to_json(d.minus)},
              {"rounds_used", d.rounds_used},
              {"joint_plus", to_json(d.joint_plus)},
              {"joint_minus", to_json(d.joint_minus)}};
}

json verdict_to_json(const UniquenessVerdict& v, int dimension) {
  json out{{"verdict",
            v.verdict == Verdict::kUnique ? "unique" : "non_unique"},
           {"dimension", dimension}};
  if (v.witness.has_value()) out["witness"] = to_json(*v.witness);
  if (v.second_joint.has_value()) out["second_joint"] = to_json(*v.second_joint);
  return out;
}

ObjectKind classify_object(const json& j) {
  if (!j.is_object()) {
    throw std::invalid_argument("expected a JSON object");
  }
  if (j.contains("measurements")) return ObjectKind::kTuple;
  if (j.contains("outcomes")) return ObjectKind::kJoint;
  if (j.contains("effects")) return ObjectKind::kPovm;
  throw std::invalid_argument(
      "unrecognized object: expected povm, tuple or joint keys");
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open file: " + path);
  }
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("malformed JSON in " + path + ": " + e.what());
  }
  return j;
}

}  // namespace jm::io
