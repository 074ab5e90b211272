#include "lipreach/records.hpp"

#include <cmath>
#include <cstdio>
#include <initializer_list>

#include <nlohmann/json.hpp>

#include "lipreach/errors.hpp"

namespace lipreach {

namespace {

using nlohmann::json;

json number_or_null(double x) {
  if (std::isfinite(x)) return x;
  return nullptr;
}

json vector_field(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json matrix_field(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json certificate_field(const LipschitzCertificate& cert) {
  json out;
  out["bound"] = cert.bound;
  out["method"] = to_string(cert.method);
  out["rho"] = cert.rho;
  out["feasibility_margin"] = number_or_null(cert.feasibility_margin);
  out["solver_warning"] = cert.solver_warning;
  if (cert.T_diag.has_value()) out["T_diag"] = vector_field(*cert.T_diag);
  return out;
}

json stats_field(const BnbStats& stats) {
  json out;
  out["nodes_created"] = stats.nodes_created;
  out["nodes_pruned"] = stats.nodes_pruned;
  out["nodes_branched"] = stats.nodes_branched;
  out["bound_evals"] = stats.bound_evals;
  out["wall_time_s"] = stats.wall_time_s;
  return out;
}

json result_field(const BnbResult& result) {
  json out;
  out["status"] = to_string(result.status);
  out["blb"] = number_or_null(result.best_lower);
  out["bub"] = number_or_null(result.best_upper);
  out["gap"] = number_or_null(result.best_upper - result.best_lower);
  out["witness"] = vector_field(result.witness);  // empty before any evaluation
  out["stats"] = stats_field(result.stats);
  return out;
}

void require_fields(const json& doc, std::initializer_list<const char*> names) {
  for (const char* name : names) {
    if (!doc.contains(name)) {
      throw ParseError(std::string("record is missing field '") + name + "'");
    }
  }
}

void require_number_or_null(const json& doc, std::initializer_list<const char*> names) {
  for (const char* name : names) {
    if (!doc.at(name).is_number() && !doc.at(name).is_null()) {
      throw ParseError(std::string("field '") + name + "' must be a number or null");
    }
  }
}

void validate_certificate_fields(const json& cert) {
  require_fields(cert, {"bound", "method", "rho", "feasibility_margin", "solver_warning"});
  if (!cert.at("bound").is_number() || cert.at("bound").get<double>() < 0.0) {
    throw ParseError("certificate bound must be a nonnegative number");
  }
  const std::string method = cert.at("method").get<std::string>();
  if (method != "sdp" && method != "naive") {
    throw ParseError("certificate method must be 'sdp' or 'naive'");
  }
  if (!cert.at("solver_warning").is_boolean()) {
    throw ParseError("solver_warning must be a boolean");
  }
  require_number_or_null(cert, {"rho", "feasibility_margin"});
}

void validate_result_fields(const json& res) {
  require_fields(res, {"status", "blb", "bub", "gap", "witness", "stats"});
  const std::string status = res.at("status").get<std::string>();
  if (status != "converged" && status != "verified_nonnegative" &&
      status != "counterexample_found" && status != "node_cap_reached") {
    throw ParseError("unknown result status '" + status + "'");
  }
  require_number_or_null(res, {"blb", "bub", "gap"});
  if (!res.at("witness").is_array()) {
    throw ParseError("witness must be an array");
  }
  const json& stats = res.at("stats");
  require_fields(stats, {"nodes_created", "nodes_pruned", "nodes_branched", "bound_evals",
                         "wall_time_s"});
}

}  // namespace

std::string certificate_record(const LipschitzCertificate& cert) {
  json doc;
  doc["schema_version"] = kRecordSchemaVersion;
  doc["kind"] = "certificate";
  doc["certificate"] = certificate_field(cert);
  return doc.dump();
}

std::string verify_record(const BnbResult& result, double epsilon) {
  json doc;
  doc["schema_version"] = kRecordSchemaVersion;
  doc["kind"] = "verify";
  doc["epsilon"] = epsilon;
  doc["result"] = result_field(result);
  return doc.dump();
}

std::string solve_record(const DirectionSolve& solve) {
  json doc;
  doc["schema_version"] = kRecordSchemaVersion;
  doc["kind"] = "solve";
  doc["step"] = solve.step;
  doc["direction"] = solve.direction;
  doc["negated"] = solve.negated;
  doc["result"] = result_field(solve.result);
  doc["certificate"] = certificate_field(solve.certificate);
  return doc.dump();
}

std::vector<std::string> partition_records(const BnbResult& result) {
  std::vector<std::string> lines;
  lines.reserve(result.partition.size());
  for (const SnapshotRect& snap : result.partition) {
    json doc;
    doc["schema_version"] = kRecordSchemaVersion;
    doc["kind"] = "partition_rect";
    doc["lower"] = vector_field(snap.rect.lower());
    doc["upper"] = vector_field(snap.rect.upper());
    doc["lower_bound"] = number_or_null(snap.lower_bound);
    doc["upper_bound"] = number_or_null(snap.upper_bound);
    doc["pruned"] = snap.pruned;
    lines.push_back(doc.dump());
  }
  return lines;
}

std::string reach_summary(const LinearDynamics& dyn, const ReachConfig& cfg,
                          const ReachabilityResult& result) {
  json doc;
  doc["schema_version"] = kRecordSchemaVersion;
  doc["kind"] = "reach_summary";
  doc["horizon"] = dyn.horizon;
  doc["dt"] = dyn.dt;
  doc["state_dim"] = dyn.state_dim();

  json config;
  config["epsilon"] = cfg.bnb.epsilon;
  config["branch_batch"] = cfg.bnb.branch_batch;
  config["refine_splits"] = cfg.bnb.refine_splits;
  config["split_parts"] = cfg.bnb.split_parts;
  config["node_cap"] = cfg.bnb.node_cap;
  config["threads"] = cfg.bnb.threads;
  config["samples"] = cfg.samples;
  config["seed"] = cfg.seed;
  config["identity_rotation"] = cfg.identity_rotation;
  config["lipschitz_method"] = to_string(cfg.lipschitz_method);
  config["localize_sectors"] = cfg.localize_sectors;
  doc["config"] = std::move(config);

  json sets = json::array();
  for (std::size_t t = 0; t < result.sets.size(); ++t) {
    json entry;
    entry["step"] = static_cast<int>(t);
    entry["rotation"] = matrix_field(result.sets[t].rotation);
    entry["lower"] = vector_field(result.sets[t].bounds.lower());
    entry["upper"] = vector_field(result.sets[t].bounds.upper());
    sets.push_back(std::move(entry));
  }
  doc["sets"] = std::move(sets);
  doc["degenerate_rotation_steps"] = result.degenerate_rotation_steps;
  doc["any_node_cap"] = result.any_node_cap;
  doc["solve_count"] = result.solves.size();
  return doc.dump();
}

std::string bench_summary_record(const std::string& benchmark,
                                 const std::vector<PropertyOutcome>& outcomes) {
  json doc;
  doc["schema_version"] = kRecordSchemaVersion;
  doc["kind"] = "bench_summary";
  doc["benchmark"] = benchmark;
  bool all_passed = true;
  json props = json::array();
  for (const PropertyOutcome& p : outcomes) {
    json entry;
    entry["name"] = p.name;
    entry["passed"] = p.passed;
    entry["detail"] = p.detail;
    props.push_back(std::move(entry));
    all_passed = all_passed && p.passed;
  }
  doc["properties"] = std::move(props);
  doc["all_passed"] = all_passed;
  return doc.dump();
}

std::string set_check_record(const std::string& target, int step, bool certified) {
  json doc;
  doc["schema_version"] = kRecordSchemaVersion;
  doc["kind"] = "set_check";
  doc["target"] = target;
  doc["step"] = step;
  doc["certified"] = certified;
  return doc.dump();
}

std::string trajectories_csv(const std::vector<std::vector<Eigen::VectorXd>>& trajectories) {
  std::string out = "sample,step";
  const Eigen::Index n =
      (!trajectories.empty() && !trajectories.front().empty()) ? trajectories.front().front().size()
                                                               : 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    out += ",x" + std::to_string(i);
  }
  out += "\n";
  char buf[64];
  for (std::size_t j = 0; j < trajectories.size(); ++j) {
    for (std::size_t t = 0; t < trajectories[j].size(); ++t) {
      out += std::to_string(j);
      out += ',';
      out += std::to_string(t);
      for (Eigen::Index i = 0; i < trajectories[j][t].size(); ++i) {
        std::snprintf(buf, sizeof(buf), ",%.17g", trajectories[j][t][i]);
        out += buf;
      }
      out += '\n';
    }
  }
  return out;
}

void validate_record(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("record is not valid JSON: ") + e.what());
  }
  require_fields(doc, {"schema_version", "kind"});
  if (!doc.at("schema_version").is_number_integer() ||
      doc.at("schema_version").get<int>() != kRecordSchemaVersion) {
    throw ParseError("unsupported schema_version");
  }
  const std::string kind = doc.at("kind").get<std::string>();
  if (kind == "certificate") {
    require_fields(doc, {"certificate"});
    validate_certificate_fields(doc.at("certificate"));
  } else if (kind == "verify") {
    require_fields(doc, {"epsilon", "result"});
    validate_result_fields(doc.at("result"));
  } else if (kind == "solve") {
    require_fields(doc, {"step", "direction", "negated", "result", "certificate"});
    validate_result_fields(doc.at("result"));
    validate_certificate_fields(doc.at("certificate"));
  } else if (kind == "partition_rect") {
    require_fields(doc, {"lower", "upper", "lower_bound", "upper_bound", "pruned"});
    if (!doc.at("lower").is_array() || !doc.at("upper").is_array() ||
        doc.at("lower").size() != doc.at("upper").size()) {
      throw ParseError("partition rectangle bounds must be arrays of equal length");
    }
  } else if (kind == "reach_summary") {
    require_fields(doc, {"horizon", "config", "sets", "any_node_cap", "solve_count"});
    if (!doc.at("sets").is_array()) throw ParseError("sets must be an array");
    for (const json& entry : doc.at("sets")) {
      require_fields(entry, {"step", "rotation", "lower", "upper"});
    }
  } else if (kind == "bench_summary") {
    require_fields(doc, {"benchmark", "properties", "all_passed"});
    for (const json& entry : doc.at("properties")) {
      require_fields(entry, {"name", "passed", "detail"});
    }
  } else if (kind == "set_check") {
    require_fields(doc, {"target", "step", "certified"});
    if (!doc.at("certified").is_boolean()) throw ParseError("certified must be a boolean");
  } else {
    throw ParseError("unknown record kind '" + kind + "'");
  }
}

}  // namespace lipreach
