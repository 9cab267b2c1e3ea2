#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

#include "driftcheck/env.hpp"
#include "driftcheck/errors.hpp"
#include "driftcheck/verify.hpp"

namespace driftcheck {

inline RunStatus run_status_from_string(const std::string& s) {
  if (s == "PASS") return RunStatus::Pass;
  if (s == "FAIL") return RunStatus::Fail;
  if (s == "ERROR") return RunStatus::Error;
  throw FormatError("unknown status: " + s);
}

inline FailureCategory failure_category_from_string(const std::string& s) {
  if (s == "NONE") return FailureCategory::None;
  if (s == "NUMERIC_DRIFT") return FailureCategory::NumericDrift;
  if (s == "ORDER_TIEBREAK") return FailureCategory::OrderTiebreak;
  if (s == "UNSUPPORTED_OP") return FailureCategory::UnsupportedOp;
  if (s == "RUNTIME_ERROR") return FailureCategory::RuntimeError;
  throw FormatError("unknown taxonomy: " + s);
}

// One suite cell: a (config, backend pair, atol) check. Serialized as one
// JSON object per line. Diff stats and latency are absent, not null, on
// ERROR records; tier2_first_divergence is always present and null when no
// divergence was localized.
struct RunRecord {
  std::string timestamp;  // stamped by append_record at write time
  std::string config;
  std::string model;
  std::string backend_pair;  // "ref->tgt"
  double atol = 1e-5;
  double rtol = 1e-5;
  RunStatus status = RunStatus::Pass;
  std::optional<double> max_abs_diff;
  std::optional<double> mae;
  std::optional<double> p95_abs_diff;
  std::optional<std::string> tier2_first_divergence;
  std::optional<std::string> task;  // task kind; metric fields follow it
  std::optional<bool> top1_match;
  std::optional<double> topk_agreement;
  std::optional<double> miou;
  std::optional<double> detection_f1;
  std::optional<bool> task_pass;
  FailureCategory taxonomy = FailureCategory::None;
  std::optional<double> latency_ms_ref;
  std::optional<double> latency_ms_tgt;
  std::uint64_t seed = 5;
  EnvFingerprint env;
  std::optional<std::string> error_message;  // ERROR only

  bool operator==(const RunRecord&) const = default;
};

inline nlohmann::json record_to_json(const RunRecord& r) {
  nlohmann::json j;
  j["timestamp"] = r.timestamp;
  j["config"] = r.config;
  j["model"] = r.model;
  j["backend_pair"] = r.backend_pair;
  j["atol"] = r.atol;
  j["rtol"] = r.rtol;
  j["status"] = run_status_name(r.status);
  const auto put = [&j](const char* key, const auto& opt) {
    if (opt.has_value()) j[key] = *opt;
  };
  put("max_abs_diff", r.max_abs_diff);
  put("mae", r.mae);
  put("p95_abs_diff", r.p95_abs_diff);
  if (r.tier2_first_divergence.has_value()) {
    j["tier2_first_divergence"] = *r.tier2_first_divergence;
  } else {
    j["tier2_first_divergence"] = nullptr;
  }
  put("task", r.task);
  put("top1_match", r.top1_match);
  put("topk_agreement", r.topk_agreement);
  put("miou", r.miou);
  put("detection_f1", r.detection_f1);
  put("task_pass", r.task_pass);
  j["taxonomy"] = failure_category_name(r.taxonomy);
  put("latency_ms_ref", r.latency_ms_ref);
  put("latency_ms_tgt", r.latency_ms_tgt);
  j["seed"] = r.seed;
  j["env"] = {
      {"version", r.env.version},
      {"os", r.env.os},
      {"cpu_model", r.env.cpu_model},
      {"logical_cores", r.env.logical_cores},
      {"determinism_flags", r.env.determinism_flags},
      {"seed", r.env.seed},
  };
  put("error_message", r.error_message);
  return j;
}

inline RunRecord record_from_json(const nlohmann::json& j) {
  RunRecord r;
  r.timestamp = j.at("timestamp").get<std::string>();
  r.config = j.at("config").get<std::string>();
  r.model = j.at("model").get<std::string>();
  r.backend_pair = j.at("backend_pair").get<std::string>();
  r.atol = j.at("atol").get<double>();
  r.rtol = j.at("rtol").get<double>();
  r.status = run_status_from_string(j.at("status").get<std::string>());
  const auto opt_double = [&j](const char* key) -> std::optional<double> {
    if (!j.contains(key)) return std::nullopt;
    return j.at(key).get<double>();
  };
  const auto opt_bool = [&j](const char* key) -> std::optional<bool> {
    if (!j.contains(key)) return std::nullopt;
    return j.at(key).get<bool>();
  };
  const auto opt_string = [&j](const char* key) -> std::optional<std::string> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<std::string>();
  };
  r.max_abs_diff = opt_double("max_abs_diff");
  r.mae = opt_double("mae");
  r.p95_abs_diff = opt_double("p95_abs_diff");
  r.tier2_first_divergence = opt_string("tier2_first_divergence");
  r.task = opt_string("task");
  r.top1_match = opt_bool("top1_match");
  r.topk_agreement = opt_double("topk_agreement");
  r.miou = opt_double("miou");
  r.detection_f1 = opt_double("detection_f1");
  r.task_pass = opt_bool("task_pass");
  r.taxonomy =
      failure_category_from_string(j.at("taxonomy").get<std::string>());
  r.latency_ms_ref = opt_double("latency_ms_ref");
  r.latency_ms_tgt = opt_double("latency_ms_tgt");
  r.seed = j.at("seed").get<std::uint64_t>();
  const auto& env = j.at("env");
  r.env.version = env.at("version").get<std::string>();
  r.env.os = env.at("os").get<std::string>();
  r.env.cpu_model = env.at("cpu_model").get<std::string>();
  r.env.logical_cores = env.at("logical_cores").get<unsigned>();
  r.env.determinism_flags = env.at("determinism_flags").get<std::string>();
  r.env.seed = env.at("seed").get<std::uint64_t>();
  r.error_message = opt_string("error_message");
  return r;
}

}  // namespace driftcheck
