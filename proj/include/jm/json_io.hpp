#pragma once

#include <string>

#include "json.hpp"
#include "jm/decomp.hpp"
#include "jm/joint.hpp"
#include "jm/povm.hpp"
#include "jm/unique.hpp"

namespace jm::io {

// Complex matrix encoding used repo-wide: row-major nested arrays of
// [re, im] pairs, IEEE-754 doubles.
nlohmann::json to_json(const Hermitian& h);
Hermitian hermitian_from_json(const nlohmann::json& j);

// {"dim": d, "effects": [matrix, ...]}
nlohmann::json to_json(const Povm& p);
Povm povm_from_json(const nlohmann::json& j, double tol = kEpsPsd);

// {"dim": d, "measurements": [povm, ...]}
nlohmann::json to_json(const MeasurementTuple& t);
MeasurementTuple tuple_from_json(const nlohmann::json& j,
                                 double tol = kEpsPsd);

// {"dim": d, "outcomes": [n1..nm], "effects": [matrix, ... lexicographic]}
nlohmann::json to_json(const JointMeasurement& m);
JointMeasurement joint_from_json(const nlohmann::json& j,
                                 double tol = kEpsPsd);

// perturbations share the joint layout
nlohmann::json to_json(const MarginalPerturbation& d);

nlohmann::json to_json(const Decomposition& d);

// {"verdict": "unique"|"non_unique", "dimension": k, "witness": ...,
//  "second_joint": ...}
nlohmann::json verdict_to_json(const UniquenessVerdict& v, int dimension);

// Any of povm / tuple / joint, telling them apart by their keys.
enum class ObjectKind { kPovm, kTuple, kJoint };
ObjectKind classify_object(const nlohmann::json& j);

nlohmann::json load_json_file(const std::string& path);

}  // namespace jm::io
