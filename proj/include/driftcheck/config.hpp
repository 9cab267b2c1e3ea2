#pragma once

#include <yaml-cpp/yaml.h>

#include <glob.h>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "driftcheck/backend.hpp"
#include "driftcheck/errors.hpp"
#include "driftcheck/graph.hpp"
#include "driftcheck/stats.hpp"
#include "driftcheck/verify.hpp"

namespace driftcheck {

enum class ModelSource { Builtin, File };

struct SyntheticInputSpec {
  Shape shape;
  std::optional<std::uint64_t> seed;  // absent: the run seed is used
};

// A config input is either a tensor-file path or a synthetic spec.
using InputSpec = std::variant<std::string, SyntheticInputSpec>;

struct RunOptions {
  bool optimized = true;
  std::optional<std::int64_t> resize_multiple = 32;  // null disables
  Precision precision = Precision::Full;
  int repeats = 11;
  bool warmup = false;
};

struct VerificationConfig {
  ToleranceSpec tol;  // atol 1e-5, rtol 1e-5
  CloseMode mode = CloseMode::Eq1;
  bool capture_activations = false;
  TaskThresholds thresholds;
};

struct RunConfig {
  ModelSource source = ModelSource::Builtin;
  std::string model;
  std::vector<InputSpec> inputs;
  std::vector<double> means{0.485, 0.456, 0.406};
  std::vector<double> stds{0.229, 0.224, 0.225};
  RunOptions options;
  VerificationConfig verification;
  MitigationSet mitigations;
  std::uint64_t seed = 5;
  bool seed_explicit = false;  // a config seed outranks the CLI default
  std::filesystem::path path;  // where the config was loaded from
};

inline std::filesystem::path resolve_path(
    const std::filesystem::path& config_path, const std::string& rel) {
  std::filesystem::path p(rel);
  if (p.is_absolute()) return p.lexically_normal();
  return (config_path.parent_path() / p).lexically_normal();
}

// Lexicographically sorted glob expansion; an empty result is legal.
inline std::vector<std::string> expand_glob(const std::string& pattern) {
  glob_t g{};
  std::vector<std::string> out;
  const int rc = glob(pattern.c_str(), 0, nullptr, &g);
  if (rc == 0) {
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  }
  globfree(&g);
  std::sort(out.begin(), out.end());
  return out;
}

namespace detail {

inline void reject_unknown_yaml_keys(const YAML::Node& map,
                                     const std::set<std::string>& allowed) {
  for (const auto& kv : map) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw InvalidConfigError("unknown key: " + key);
  }
}

template <typename T>
T yaml_as(const YAML::Node& node, const std::string& key) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw InvalidConfigError("invalid value for " + key);
  }
}

inline std::vector<double> yaml_double_list(const YAML::Node& node,
                                            const std::string& key) {
  if (!node.IsSequence()) throw InvalidConfigError(key + " must be a list");
  std::vector<double> out;
  for (const auto& v : node) out.push_back(yaml_as<double>(v, key));
  return out;
}

inline Shape yaml_shape(const YAML::Node& node, const std::string& key) {
  if (!node.IsSequence()) throw InvalidConfigError(key + " must be a list");
  Shape s;
  for (const auto& v : node) s.push_back(yaml_as<std::int64_t>(v, key));
  return s;
}

inline InputSpec parse_input_entry(const YAML::Node& node, std::size_t i) {
  const std::string key = "inputs[" + std::to_string(i) + "]";
  if (node.IsScalar()) return yaml_as<std::string>(node, key);
  if (!node.IsMap()) {
    throw InvalidConfigError(key + " must be a path or {shape, seed}");
  }
  reject_unknown_yaml_keys(node, {"shape", "seed"});
  if (!node["shape"]) throw InvalidConfigError(key + " missing shape");
  SyntheticInputSpec spec;
  spec.shape = yaml_shape(node["shape"], key + ".shape");
  if (shape_numel(spec.shape) <= 0) {
    throw InvalidConfigError(key + ".shape must be nonempty");
  }
  if (node["seed"]) {
    const auto s = yaml_as<std::int64_t>(node["seed"], key + ".seed");
    if (s < 0) throw InvalidConfigError(key + ".seed must be >= 0");
    spec.seed = std::uint64_t(s);
  }
  return spec;
}

inline void parse_options(const YAML::Node& node, RunOptions& opt) {
  if (!node.IsMap()) throw InvalidConfigError("options must be a mapping");
  reject_unknown_yaml_keys(node, {"optimized", "compile", "resize_multiple",
                                  "precision", "repeats", "warmup"});
  if (node["optimized"] && node["compile"]) {
    throw InvalidConfigError(
        "options.compile is an alias of options.optimized; set only one");
  }
  if (node["optimized"]) {
    opt.optimized = yaml_as<bool>(node["optimized"], "options.optimized");
  }
  if (node["compile"]) {
    opt.optimized = yaml_as<bool>(node["compile"], "options.compile");
  }
  if (node["resize_multiple"]) {
    if (node["resize_multiple"].IsNull()) {
      opt.resize_multiple.reset();
    } else {
      const auto m = yaml_as<std::int64_t>(node["resize_multiple"],
                                           "options.resize_multiple");
      if (m <= 0) {
        throw InvalidConfigError("options.resize_multiple must be positive");
      }
      opt.resize_multiple = m;
    }
  }
  if (node["precision"]) {
    const auto p = yaml_as<std::string>(node["precision"], "options.precision");
    if (p == "full") {
      opt.precision = Precision::Full;
    } else if (p == "reduced") {
      opt.precision = Precision::Reduced;
    } else {
      throw InvalidConfigError("options.precision must be full or reduced");
    }
  }
  if (node["repeats"]) {
    opt.repeats = yaml_as<int>(node["repeats"], "options.repeats");
    if (opt.repeats < 1) {
      throw InvalidConfigError("options.repeats must be >= 1");
    }
  }
  if (node["warmup"]) {
    opt.warmup = yaml_as<bool>(node["warmup"], "options.warmup");
  }
}

inline void parse_thresholds(const YAML::Node& node, TaskThresholds& th) {
  if (!node.IsMap()) {
    throw InvalidConfigError("verification.task_thresholds must be a mapping");
  }
  reject_unknown_yaml_keys(
      node, {"top_k", "topk_agreement", "miou", "detection_f1", "match_iou"});
  const std::string prefix = "verification.task_thresholds.";
  if (node["top_k"]) {
    const auto k = yaml_as<std::int64_t>(node["top_k"], prefix + "top_k");
    if (k < 1) throw InvalidConfigError(prefix + "top_k must be >= 1");
    th.top_k = std::size_t(k);
  }
  const auto fraction = [&](const char* key, double& field) {
    if (!node[key]) return;
    field = yaml_as<double>(node[key], prefix + key);
    if (field < 0.0 || field > 1.0) {
      throw InvalidConfigError(prefix + std::string(key) +
                               " must be in [0, 1]");
    }
  };
  fraction("topk_agreement", th.topk_agreement);
  fraction("miou", th.miou);
  fraction("detection_f1", th.detection_f1);
  fraction("match_iou", th.match_iou);
}

inline void parse_verification(const YAML::Node& node, VerificationConfig& v) {
  if (!node.IsMap()) {
    throw InvalidConfigError("verification must be a mapping");
  }
  reject_unknown_yaml_keys(
      node, {"tol", "mode", "capture_activations", "task_thresholds"});
  if (node["tol"]) {
    const auto& tol = node["tol"];
    if (!tol.IsMap()) {
      throw InvalidConfigError("verification.tol must be a mapping");
    }
    reject_unknown_yaml_keys(tol, {"atol", "rtol"});
    if (tol["atol"]) {
      v.tol.atol = yaml_as<double>(tol["atol"], "verification.tol.atol");
    }
    if (tol["rtol"]) {
      v.tol.rtol = yaml_as<double>(tol["rtol"], "verification.tol.rtol");
    }
    if (v.tol.atol < 0 || v.tol.rtol < 0) {
      throw InvalidConfigError("verification.tol values must be >= 0");
    }
  }
  if (node["mode"]) {
    v.mode = close_mode_from_string(
        yaml_as<std::string>(node["mode"], "verification.mode"));
  }
  if (node["capture_activations"]) {
    v.capture_activations = yaml_as<bool>(node["capture_activations"],
                                          "verification.capture_activations");
  }
  if (node["task_thresholds"]) {
    parse_thresholds(node["task_thresholds"], v.thresholds);
  }
}

inline void parse_mitigations(const YAML::Node& node, MitigationSet& m) {
  if (!node.IsMap()) throw InvalidConfigError("mitigations must be a mapping");
  reject_unknown_yaml_keys(
      node, {"pre_nms_sort", "force_full_precision", "eager_fallback_ops"});
  if (node["pre_nms_sort"]) {
    m.pre_nms_sort =
        yaml_as<bool>(node["pre_nms_sort"], "mitigations.pre_nms_sort");
  }
  if (node["force_full_precision"]) {
    m.force_full_precision = yaml_as<bool>(
        node["force_full_precision"], "mitigations.force_full_precision");
  }
  if (node["eager_fallback_ops"]) {
    const auto& ops = node["eager_fallback_ops"];
    if (!ops.IsSequence()) {
      throw InvalidConfigError("mitigations.eager_fallback_ops must be a list");
    }
    for (const auto& o : ops) {
      const auto name =
          yaml_as<std::string>(o, "mitigations.eager_fallback_ops");
      const auto kind = op_kind_from_string(name);
      if (!kind) {
        throw InvalidConfigError(
            "mitigations.eager_fallback_ops: unknown op: " + name);
      }
      m.eager_fallback_ops.insert(*kind);
    }
  }
}

}  // namespace detail

inline RunConfig parse_config(const YAML::Node& root,
                              const std::filesystem::path& path) {
  if (!root.IsMap()) {
    throw InvalidConfigError("config root must be a mapping");
  }
  detail::reject_unknown_yaml_keys(
      root, {"source", "model", "inputs", "means", "stds", "options",
             "verification", "mitigations", "seed"});
  RunConfig c;
  c.path = path;

  if (!root["source"]) throw InvalidConfigError("missing key: source");
  const auto source = detail::yaml_as<std::string>(root["source"], "source");
  if (source == "builtin") {
    c.source = ModelSource::Builtin;
  } else if (source == "file") {
    c.source = ModelSource::File;
  } else {
    throw InvalidConfigError("source must be builtin or file");
  }

  if (!root["model"]) throw InvalidConfigError("missing key: model");
  c.model = detail::yaml_as<std::string>(root["model"], "model");
  if (c.source == ModelSource::Builtin && c.model != "classifier" &&
      c.model != "segmenter" && c.model != "detector") {
    throw InvalidConfigError("unknown builtin model: " + c.model);
  }

  if (!root["inputs"] || !root["inputs"].IsSequence() ||
      root["inputs"].size() == 0) {
    throw InvalidConfigError("inputs must be a nonempty list");
  }
  std::size_t idx = 0;
  for (const auto& entry : root["inputs"]) {
    c.inputs.push_back(detail::parse_input_entry(entry, idx++));
  }

  if (root["means"]) c.means = detail::yaml_double_list(root["means"], "means");
  if (root["stds"]) c.stds = detail::yaml_double_list(root["stds"], "stds");
  for (double s : c.stds) {
    if (s == 0.0) throw InvalidConfigError("stds must not contain 0");
  }

  if (root["options"]) detail::parse_options(root["options"], c.options);
  if (root["verification"]) {
    detail::parse_verification(root["verification"], c.verification);
  }
  if (root["mitigations"]) {
    detail::parse_mitigations(root["mitigations"], c.mitigations);
  }
  if (root["seed"]) {
    const auto s = detail::yaml_as<std::int64_t>(root["seed"], "seed");
    if (s < 0) throw InvalidConfigError("seed must be >= 0");
    c.seed = std::uint64_t(s);
    c.seed_explicit = true;
  }
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::BadFile&) {
    throw ConfigParseError("cannot read config: " + path.string());
  } catch (const YAML::Exception& e) {
    throw ConfigParseError("malformed YAML in " + path.string() + ": " +
                           e.what());
  }
  return parse_config(root, path);
}

}  // namespace driftcheck
