#include "jm/cli.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "jm/conic.hpp"
#include "jm/decomp.hpp"
#include "jm/fixtures.hpp"
#include "jm/json_io.hpp"
#include "jm/unique.hpp"

namespace jm::cli {

namespace {

using nlohmann::json;

constexpr double kBoundaryTol = 1e-6;  // s* threshold for the compatible set

struct Options {
  double tol = 1e-8;
  std::string output = "text";
  uint64_t seed = 0;
  bool allow_t_gt_1 = false;
  std::string dump_sdp;
  double depolarize_t = std::numeric_limits<double>::quiet_NaN();
  std::string out_file;
};

struct CommandError {
  int code;
  std::string reason;
};

void emit(const Options& opts, std::ostream& out, const json& j,
          const std::string& text) {
  if (opts.output == "json") {
    out << j.dump(2) << "\n";
  } else {
    out << text;
  }
}

void write_out_file(const Options& opts, const json& j) {
  if (opts.out_file.empty()) return;
  std::ofstream f(opts.out_file);
  if (!f) throw CommandError{2, "cannot write file: " + opts.out_file};
  f << j.dump(2) << "\n";
}

json tolerances_json(const Options& opts) {
  return json{{"tol", opts.tol},
              {"eps_eq", kEpsEq},
              {"eps_psd", kEpsPsd},
              {"eps_unique", kEpsUnique},
              {"boundary_tol", kBoundaryTol}};
}

std::string fmt(double x, int prec = 7) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << x;
  return os.str();
}

MeasurementTuple load_tuple(const std::string& path, const Options& opts) {
  const json j = io::load_json_file(path);
  if (io::classify_object(j) != io::ObjectKind::kTuple) {
    throw std::invalid_argument(path + ": expected a measurement tuple");
  }
  MeasurementTuple t = io::tuple_from_json(j, opts.tol);
  if (!std::isnan(opts.depolarize_t)) {
    t = depolarize(t, opts.depolarize_t, opts.allow_t_gt_1);
  }
  return t;
}

// ---------------------------------------------------------------------------

int cmd_validate(const std::string& path, const Options& opts,
                 std::ostream& out) {
  const json j = io::load_json_file(path);
  const io::ObjectKind kind = io::classify_object(j);

  std::vector<Violation> violations;
  std::string kind_name;
  auto effects_of = [&](const json& obj) {
    std::vector<Hermitian> effects;
    const int dim = obj.at("dim").get<int>();
    for (const auto& e : obj.at("effects")) {
      effects.push_back(io::hermitian_from_json(e));
      if (effects.back().dim() != dim) {
        throw std::invalid_argument("effect dimension disagrees with dim");
      }
    }
    return effects;
  };

  switch (kind) {
    case io::ObjectKind::kPovm: {
      kind_name = "povm";
      violations = validate_povm(effects_of(j), opts.tol).violations;
      break;
    }
    case io::ObjectKind::kTuple: {
      kind_name = "tuple";
      int index = 0;
      for (const auto& m : j.at("measurements")) {
        for (Violation v : validate_povm(effects_of(m), opts.tol).violations) {
          v.what = "measurement " + std::to_string(index + 1) + ": " + v.what;
          violations.push_back(std::move(v));
        }
        ++index;
      }
      break;
    }
    case io::ObjectKind::kJoint: {
      kind_name = "joint";
      const auto counts = j.at("outcomes").get<std::vector<int>>();
      int cells = 1;
      for (int c : counts) cells *= c;
      const auto effects = effects_of(j);
      if (static_cast<int>(effects.size()) != cells) {
        throw std::invalid_argument("joint: expected " +
                                    std::to_string(cells) + " effects");
      }
      violations = validate_povm(effects, opts.tol).violations;
      break;
    }
  }

  json rep{{"kind", kind_name},
           {"valid", violations.empty()},
           {"tolerances", tolerances_json(opts)}};
  std::ostringstream text;
  text << kind_name << (violations.empty() ? " valid" : " INVALID")
       << " (tol " << opts.tol << ")\n";
  json vlist = json::array();
  for (const auto& v : violations) {
    vlist.push_back({{"what", v.what},
                     {"effect", v.effect},
                     {"residual", v.residual}});
    text << "  " << v.what;
    if (v.effect >= 0) text << " at effect " << v.effect + 1;
    text << ", residual " << v.residual << "\n";
  }
  rep["violations"] = std::move(vlist);
  emit(opts, out, rep, text.str());
  return violations.empty() ? 0 : 1;
}

int cmd_check_jm(const std::string& path, const Options& opts,
                 std::ostream& out) {
  const MeasurementTuple t = load_tuple(path, opts);
  const JointSearch search = find_joint_certified(t);
  if (search.joint.has_value()) {
    const VerifyReport rep = verify_joint(*search.joint, t, opts.tol);
    json j{{"compatible", true},
           {"marginal_residual", rep.worst_residual},
           {"joint", io::to_json(*search.joint)},
           {"tolerances", tolerances_json(opts)}};
    write_out_file(opts, io::to_json(*search.joint));
    emit(opts, out, j,
         "compatible: joint found, worst marginal residual " +
             fmt(rep.worst_residual, 12) + " (tol " + fmt(opts.tol, 12) +
             ")\n");
    return 0;
  }
  const auto& cert = *search.certificate;
  json j{{"compatible", false},
         {"certificate", {{"pairing_residual", cert.pairing_residual},
                          {"value", cert.value}}},
         {"tolerances", tolerances_json(opts)}};
  emit(opts, out, j,
       "incompatible: dual certificate residual <= 1e-07 (leak " +
           fmt(cert.pairing_residual, 12) + ", value " + fmt(cert.value, 7) +
           ")\n");
  return 1;
}

int cmd_visibility(const std::string& path, const Options& opts,
                   std::ostream& out) {
  const MeasurementTuple t = load_tuple(path, opts);
  const VisibilityResult res = critical_visibility(t);
  json j{{"t_star", res.t_star},
         {"joint", io::to_json(res.joint)},
         {"tolerances", tolerances_json(opts)}};
  write_out_file(opts, io::to_json(res.joint));
  emit(opts, out, j, "t* = " + fmt(res.t_star) + "\n");
  return 0;
}

int cmd_unique(const std::string& path, const Options& opts,
               std::ostream& out) {
  const MeasurementTuple t = load_tuple(path, opts);
  const UniquenessVerdict v = joint_uniqueness(t);
  const int dimension = joint_set_affine_dimension(t);
  json j = io::verdict_to_json(v, dimension);
  j["max_objective_seen"] = v.max_objective_seen;
  j["tolerances"] = tolerances_json(opts);
  std::ostringstream text;
  text << (v.verdict == Verdict::kUnique ? "unique" : "non-unique")
       << " joint measurement, affine dimension " << dimension
       << " (eps_unique " << kEpsUnique << ")\n";
  emit(opts, out, j, text.str());
  return v.verdict == Verdict::kUnique ? 0 : 1;
}

int cmd_extremal(const std::string& path, const Options& opts,
                 std::ostream& out) {
  const json j = io::load_json_file(path);
  bool extremal = false;
  std::string what;
  if (io::classify_object(j) == io::ObjectKind::kTuple) {
    const MeasurementTuple t = io::tuple_from_json(j, opts.tol);
    extremal = tuple_is_extremal(t);
    what = "tuple extremal in the product measurement set";
  } else {
    const Povm p = io::povm_from_json(j, opts.tol);
    extremal = is_extremal_povm(p).extremal;
    what = "povm extremal";
  }
  json rep{{"extremal", extremal}, {"tolerances", tolerances_json(opts)}};
  emit(opts, out, rep,
       what + ": " + (extremal ? "yes" : "no") + "\n");
  return extremal ? 0 : 1;
}

int cmd_boundary(const std::string& path, const Options& opts,
                 std::ostream& out) {
  const json j = io::load_json_file(path);
  bool boundary = false;
  std::string what;
  if (io::classify_object(j) == io::ObjectKind::kTuple) {
    boundary = tuple_is_boundary(io::tuple_from_json(j, opts.tol));
    what = "tuple boundary in the product measurement set";
  } else {
    boundary = is_boundary_povm(io::povm_from_json(j, opts.tol));
    what = "povm boundary";
  }
  json rep{{"boundary", boundary}, {"tolerances", tolerances_json(opts)}};
  emit(opts, out, rep, what + ": " + (boundary ? "yes" : "no") + "\n");
  return boundary ? 0 : 1;
}

int cmd_decompose(const std::string& path, const Options& opts,
                  std::ostream& out) {
  const MeasurementTuple t = load_tuple(path, opts);
  const UniquenessVerdict v = joint_uniqueness(t);
  if (v.verdict == Verdict::kUnique) {
    emit(opts, out,
         json{{"decomposed", false},
              {"reason", "unique joint measurement, no nontrivial "
                         "decomposition into compatible tuples"}},
         "unique joint measurement: no nontrivial decomposition\n");
    return 1;
  }
  const JointMeasurement base = max_min_eig_joint(t).joint;
  const Decomposition dec = decompose_tuple(t, base, *v.second_joint);
  json j = io::to_json(dec);
  j["tolerances"] = tolerances_json(opts);
  write_out_file(opts, io::to_json(dec));
  std::ostringstream text;
  text << "decomposed after " << dec.rounds_used
       << " round(s); both halves compatible by construction\n";
  emit(opts, out, j, text.str());
  return 0;
}

int cmd_classify(const std::string& path, const Options& opts,
                 std::ostream& out) {
  const MeasurementTuple t = load_tuple(path, opts);

  json rep{{"valid", true}, {"tolerances", tolerances_json(opts)}};
  std::ostringstream text;
  text << "classification (tol " << opts.tol << ")\n";
  text << "  valid tuple:        yes\n";

  // componentwise structure in the product set
  std::vector<bool> member_extremal, member_boundary;
  for (const auto& m : t.measurements()) {
    member_extremal.push_back(is_extremal_povm(m).extremal);
    member_boundary.push_back(is_boundary_povm(m));
  }
  const bool ext_pm = tuple_is_extremal(t);
  const bool bnd_pm = tuple_is_boundary(t);
  rep["extremal_pm"] = ext_pm;
  rep["boundary_pm"] = bnd_pm;
  text << "  extremal in P^m:    " << (ext_pm ? "yes" : "no") << "\n";
  text << "  boundary in P^m:    " << (bnd_pm ? "yes" : "no") << "\n";

  const JointSearch search = find_joint_certified(t);
  const bool compatible = search.joint.has_value();
  rep["compatible"] = compatible;
  text << "  compatible:         " << (compatible ? "yes" : "no") << "\n";

  std::vector<std::pair<std::string, bool>> consistency;
  bool all_extremal = true, any_boundary = false;
  for (size_t i = 0; i < member_extremal.size(); ++i) {
    all_extremal = all_extremal && member_extremal[i];
    any_boundary = any_boundary || member_boundary[i];
  }
  consistency.emplace_back(
      "tuple extremality in P^m is the conjunction over members",
      ext_pm == all_extremal);
  consistency.emplace_back(
      "tuple boundary in P^m is the disjunction over members",
      bnd_pm == any_boundary);

  if (!compatible) {
    rep["certificate"] = {
        {"pairing_residual", search.certificate->pairing_residual},
        {"value", search.certificate->value}};
    text << "  (incompatible: certificate value "
         << fmt(search.certificate->value, 7) << ")\n";
  } else {
    const VisibilityResult vis = critical_visibility(t);
    rep["t_star"] = vis.t_star;
    text << "  t*:                 " << fmt(vis.t_star) << "\n";

    const MinEigJoint me = max_min_eig_joint(t);
    const bool bnd_jm = me.s_star <= kBoundaryTol;
    rep["s_star"] = me.s_star;
    rep["boundary_jm"] = bnd_jm;
    text << "  s*:                 " << fmt(me.s_star) << "\n";
    text << "  boundary in J_m:    " << (bnd_jm ? "yes" : "no") << "\n";

    const UniquenessVerdict v = joint_uniqueness(t);
    const bool unique = v.verdict == Verdict::kUnique;
    const int dimension = joint_set_affine_dimension(t);
    rep["verdict"] = unique ? "unique" : "non_unique";
    rep["dimension"] = dimension;
    text << "  joint unique:       " << (unique ? "yes" : "no")
         << " (affine dimension " << dimension << ")\n";

    const bool joint_extremal = is_extremal_povm(me.joint.as_povm()).extremal;
    const bool ext_jm = tuple_extremal_jm(t);
    rep["extremal_jm"] = ext_jm;
    text << "  extremal in J_m:    " << (ext_jm ? "yes" : "no") << "\n";

    // cross-checks among the computed properties
    const bool joint_full_rank =
        !is_boundary_povm(me.joint.as_povm());
    consistency.emplace_back(
        "interior of J_m certified by a full-rank joint and vice versa",
        bnd_jm ? !joint_full_rank : joint_full_rank);
    consistency.emplace_back("extremal in J_m implies unique joint",
                             !ext_jm || unique);
    consistency.emplace_back("unique joint implies boundary of J_m",
                             !unique || bnd_jm);
    consistency.emplace_back(
        "extremal in J_m matches unique + extremal joint measurement",
        ext_jm == (unique && joint_extremal));
    consistency.emplace_back("unique iff affine dimension zero",
                             unique == (dimension == 0));
  }

  bool all_ok = true;
  json cons = json::array();
  text << "consistency\n";
  for (const auto& [name, ok] : consistency) {
    all_ok = all_ok && ok;
    cons.push_back({{"check", name}, {"holds", ok}});
    text << "  [" << (ok ? "ok" : "VIOLATED") << "] " << name << "\n";
  }
  rep["consistency"] = std::move(cons);
  rep["consistent"] = all_ok;
  emit(opts, out, rep, text.str());
  return all_ok ? 0 : 1;
}

int cmd_gen(const std::string& name, const std::vector<double>& p,
            const std::vector<double>& q, int dim, int outcomes, int parties,
            double visibility, const Options& opts, std::ostream& out) {
  json j;
  if (name == "random-tuple") {
    j = io::to_json(
        fixtures::random_tuple(dim, outcomes, parties, visibility, opts.seed));
  } else if (name == "random-povm") {
    j = io::to_json(fixtures::random_povm(
        dim, outcomes, fixtures::RandomPovmKind::kFullRank, opts.seed));
  } else {
    const fixtures::Fixture f = fixtures::make_fixture(name, p, q);
    if (std::holds_alternative<MeasurementTuple>(f)) {
      j = io::to_json(std::get<MeasurementTuple>(f));
    } else {
      j = io::to_json(std::get<JointMeasurement>(f));
    }
  }
  write_out_file(opts, j);
  out << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"joint measurability toolbox for tuples of POVMs"};
  app.require_subcommand(1);

  Options opts;
  app.add_option("--tol", opts.tol, "verdict tolerance")
      ->capture_default_str();
  app.add_option("--output", opts.output, "report format: text or json")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();
  app.add_option("--seed", opts.seed, "seed for generators");
  app.add_flag("--allow-t-gt-1", opts.allow_t_gt_1,
               "allow depolarisation parameters above 1 (boundary probes)");
  app.add_option("--dump-sdp", opts.dump_sdp,
                 "append every solved SDP to this file in text form");
  app.add_option("--depolarize", opts.depolarize_t,
                 "depolarise the input tuple before the command");
  app.add_option("--out", opts.out_file, "write the produced object here");

  std::string file;
  auto add_file = [&](CLI::App* cmd) {
    cmd->fallthrough();  // global flags may follow the subcommand
    cmd->add_option("file", file, "input JSON file")->required();
  };
  CLI::App* validate = app.add_subcommand("validate", "validate a povm/tuple/joint");
  add_file(validate);
  CLI::App* checkjm = app.add_subcommand("check-jm", "decide joint measurability");
  add_file(checkjm);
  CLI::App* visibility = app.add_subcommand("visibility", "critical depolarising visibility");
  add_file(visibility);
  CLI::App* unique = app.add_subcommand("unique", "uniqueness of the joint measurement");
  add_file(unique);
  CLI::App* extremal = app.add_subcommand("extremal", "extremality in the measurement set");
  add_file(extremal);
  CLI::App* boundary = app.add_subcommand("boundary", "boundary in the measurement set");
  add_file(boundary);
  CLI::App* classify = app.add_subcommand("classify", "full classification pipeline");
  add_file(classify);
  CLI::App* decompose = app.add_subcommand("decompose", "split into compatible tuples");
  add_file(decompose);

  CLI::App* gen = app.add_subcommand("gen", "emit a fixture");
  gen->fallthrough();
  std::string gen_name;
  std::vector<double> gen_p, gen_q;
  int gen_dim = 2, gen_outcomes = 2, gen_parties = 2;
  double gen_visibility = 1.0;
  gen->add_option("name", gen_name, "fixture name")->required();
  gen->add_option("--p", gen_p, "first probability vector")->delimiter(',');
  gen->add_option("--q", gen_q, "second probability vector")->delimiter(',');
  gen->add_option("--dim", gen_dim, "dimension for random fixtures");
  gen->add_option("--outcomes", gen_outcomes, "outcomes for random fixtures");
  gen->add_option("--parties", gen_parties, "parties for random fixtures");
  gen->add_option("--visibility", gen_visibility, "visibility for random tuples");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  if (!opts.dump_sdp.empty()) conic::set_default_dump_path(opts.dump_sdp);

  auto fail = [&](int code, const std::string& reason) {
    if (opts.output == "json") {
      out << json{{"error", true}, {"reason", reason}}.dump(2) << "\n";
    }
    err << reason << "\n";
    return code;
  };

  try {
    if (validate->parsed()) return cmd_validate(file, opts, out);
    if (checkjm->parsed()) return cmd_check_jm(file, opts, out);
    if (visibility->parsed()) return cmd_visibility(file, opts, out);
    if (unique->parsed()) return cmd_unique(file, opts, out);
    if (extremal->parsed()) return cmd_extremal(file, opts, out);
    if (boundary->parsed()) return cmd_boundary(file, opts, out);
    if (classify->parsed()) return cmd_classify(file, opts, out);
    if (decompose->parsed()) return cmd_decompose(file, opts, out);
    if (gen->parsed()) {
      return cmd_gen(gen_name, gen_p, gen_q, gen_dim, gen_outcomes,
                     gen_parties, gen_visibility, opts, out);
    }
  } catch (const CommandError& e) {
    return fail(e.code, e.reason);
  } catch (const IncompatibleTuple& e) {
    return fail(1, std::string("incompatible tuple: ") + e.what());
  } catch (const SolverFailure& e) {
    return fail(3, std::string("solver failure: ") + e.what());
  } catch (const std::invalid_argument& e) {
    return fail(2, std::string("invalid input: ") + e.what());
  } catch (const json::exception& e) {
    return fail(2, std::string("invalid input: ") + e.what());
  }
  return 2;
}

}  // namespace jm::cli
