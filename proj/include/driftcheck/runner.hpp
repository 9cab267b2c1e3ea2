#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "driftcheck/backend.hpp"
#include "driftcheck/builders.hpp"
#include "driftcheck/config.hpp"
#include "driftcheck/image.hpp"
#include "driftcheck/jsonl.hpp"
#include "driftcheck/model_json.hpp"
#include "driftcheck/summary.hpp"
#include "driftcheck/tensor_io.hpp"
#include "driftcheck/verify.hpp"

namespace driftcheck {

// One sweep: every (config, backend pair, atol) cell runs once. The pairs
// apply to every config; a target override (the CLI's --target/--compile)
// replaces the target side of each pair and outranks options.optimized.
struct SweepPlan {
  std::vector<std::string> config_paths;  // ordered
  std::vector<std::pair<BackendSpec, BackendSpec>> backend_pairs{
      {make_reference_spec(), make_optimized_spec()}};
  std::vector<double> atol_grid{1e-6, 1e-5, 1e-4, 1e-3};  // strictly increasing
  double rtol = 1e-5;
  std::filesystem::path out_path = "results.jsonl";
  std::string config_pattern;  // echoed when no configs matched
  std::uint64_t seed = 5;      // for configs without an explicit seed
  std::optional<BackendKind> target_override;
  std::size_t jobs = 1;
};

struct SuiteSummary {
  std::size_t total = 0;
  std::size_t passed = 0;
  std::size_t failed = 0;
  std::size_t errored = 0;
};

struct SuiteResult {
  SuiteSummary summary;
  std::vector<RunRecord> records;  // deterministic plan order
};

// The harness PRNG is the seed itself: every synthetic tensor draws from a
// stream derived from (seed, label), so no global state needs resetting.
inline SplitMix64 set_deterministic(std::uint64_t seed) {
  return SplitMix64(seed);
}

inline std::uint64_t effective_seed(const RunConfig& cfg,
                                    std::uint64_t fallback) {
  return cfg.seed_explicit ? cfg.seed : fallback;
}

inline void validate_plan(const SweepPlan& plan) {
  if (plan.backend_pairs.empty()) {
    throw InvalidConfigError("plan needs at least one backend pair");
  }
  if (plan.atol_grid.empty()) {
    throw InvalidConfigError("atol grid must be nonempty");
  }
  for (std::size_t i = 0; i < plan.atol_grid.size(); ++i) {
    if (plan.atol_grid[i] < 0) {
      throw InvalidConfigError("atol values must be >= 0");
    }
    if (i > 0 && plan.atol_grid[i] <= plan.atol_grid[i - 1]) {
      throw InvalidConfigError("atol grid must be strictly increasing");
    }
  }
  if (plan.rtol < 0) throw InvalidConfigError("rtol must be >= 0");
}

inline GraphModel build_model(const RunConfig& cfg, std::uint64_t seed) {
  if (cfg.source == ModelSource::Builtin) {
    return build_builtin(cfg.model, seed);
  }
  return load_model_file(resolve_path(cfg.path, cfg.model));
}

// Config inputs map positionally onto the model's declared inputs. Every
// tensor is normalized, then snapped to the configured size multiple when it
// is an image-shaped rank-4 tensor.
inline std::map<std::string, Tensor> build_inputs(const RunConfig& cfg,
                                                  const GraphModel& model,
                                                  std::uint64_t seed) {
  if (cfg.inputs.size() != model.inputs.size()) {
    throw InvalidConfigError(
        "config provides " + std::to_string(cfg.inputs.size()) +
        " input(s), model expects " + std::to_string(model.inputs.size()));
  }
  std::map<std::string, Tensor> inputs;
  for (std::size_t i = 0; i < cfg.inputs.size(); ++i) {
    Tensor x;
    if (const auto* path = std::get_if<std::string>(&cfg.inputs[i])) {
      x = read_tensor_file(resolve_path(cfg.path, *path));
    } else {
      const auto& spec = std::get<SyntheticInputSpec>(cfg.inputs[i]);
      SplitMix64 g = make_stream(spec.seed.value_or(seed),
                                 "input:" + std::to_string(i));
      x = Tensor::zeros(DType::F32, spec.shape);
      for (auto& v : x.f32()) v = g.next_symmetric(1.0f);
    }
    x = normalize(x, cfg.means, cfg.stds);
    if (cfg.options.resize_multiple.has_value() && x.rank() == 4) {
      x = adjust_to_multiple(x, *cfg.options.resize_multiple);
    }
    inputs.emplace(model.inputs[i].first, std::move(x));
  }
  return inputs;
}

namespace detail {

// Config-level adjustments to one side of a pair: the optimized backend takes
// the configured precision, and mitigations merge into both sides (the
// reference side then sheds whatever it cannot vary).
inline BackendSpec apply_config(BackendSpec s, const RunConfig& cfg) {
  if (s.kind == BackendKind::Optimized) s.precision = cfg.options.precision;
  s.mitigations.pre_nms_sort |= cfg.mitigations.pre_nms_sort;
  s.mitigations.force_full_precision |= cfg.mitigations.force_full_precision;
  s.mitigations.eager_fallback_ops.insert(
      cfg.mitigations.eager_fallback_ops.begin(),
      cfg.mitigations.eager_fallback_ops.end());
  return normalized(std::move(s));
}

// Everything about one (config, pair) that is shared across the atol grid:
// the traces, latency medians, task metrics, and the lazily probed
// pre_nms_sort retry. Errors are captured, never thrown.
struct PairExecution {
  BackendSpec ref;
  BackendSpec tgt;
  std::uint64_t seed = 5;
  bool ok = false;
  bool model_ok = false;
  bool unsupported = false;
  std::string error_message;
  GraphModel model;
  std::map<std::string, Tensor> inputs;
  ExecutionTrace ref_trace;
  ExecutionTrace tgt_trace;
  double latency_ref = 0.0;
  double latency_tgt = 0.0;
  std::optional<TaskMetrics> tier3;
  std::optional<bool> retry_pass;
};

inline PairExecution execute_pair(const RunConfig& cfg, BackendSpec base_ref,
                                  BackendSpec base_tgt, std::uint64_t seed) {
  PairExecution px;
  px.ref = apply_config(std::move(base_ref), cfg);
  px.tgt = apply_config(std::move(base_tgt), cfg);
  px.seed = seed;
  try {
    px.model = build_model(cfg, seed);
    px.model_ok = true;
    px.inputs = build_inputs(cfg, px.model, seed);
    const bool capture = cfg.verification.capture_activations;
    px.ref_trace =
        execute(px.model, px.inputs, px.ref, capture, cfg.options.repeats);
    px.tgt_trace =
        execute(px.model, px.inputs, px.tgt, capture, cfg.options.repeats);
    px.latency_ref =
        median_latency_ms(px.ref_trace.latencies_ms, cfg.options.warmup);
    px.latency_tgt =
        median_latency_ms(px.tgt_trace.latencies_ms, cfg.options.warmup);
    const auto& primary = px.model.outputs.front();
    px.tier3 = evaluate_task(px.model.task, px.ref_trace.outputs.at(primary),
                             px.tgt_trace.outputs.at(primary),
                             cfg.verification.thresholds);
    px.ok = true;
  } catch (const UnsupportedOpError& e) {
    px.unsupported = true;
    px.error_message = e.what();
  } catch (const std::exception& e) {
    px.error_message = e.what();
  }
  return px;
}

// Re-run the target once with pre-NMS sorting and report whether the task
// metric then passes; cached because the answer is atol-independent.
inline bool tier3_retry_pass(const RunConfig& cfg, PairExecution& px) {
  if (!px.retry_pass.has_value()) {
    BackendSpec retry = px.tgt;
    retry.mitigations.pre_nms_sort = true;
    try {
      const auto trace = execute(px.model, px.inputs, retry, false, 1);
      const auto& primary = px.model.outputs.front();
      const auto m = evaluate_task(
          px.model.task, px.ref_trace.outputs.at(primary),
          trace.outputs.at(primary), cfg.verification.thresholds);
      px.retry_pass = m.pass;
    } catch (const std::exception&) {
      px.retry_pass = false;
    }
  }
  return *px.retry_pass;
}

inline RunRecord evaluate_cell(const RunConfig& cfg, PairExecution& px,
                               const ToleranceSpec& tol) {
  RunRecord r;
  r.config = cfg.path.string();
  r.backend_pair = px.ref.name + "->" + px.tgt.name;
  r.atol = tol.atol;
  r.rtol = tol.rtol;
  r.seed = px.seed;
  r.env = env_fingerprint(px.seed);
  if (!px.ok) {
    r.model = px.model_ok ? px.model.name : cfg.model;
    r.status = RunStatus::Error;
    r.taxonomy = px.unsupported ? FailureCategory::UnsupportedOp
                                : FailureCategory::RuntimeError;
    r.error_message = px.error_message;
    return r;
  }
  r.model = px.model.name;

  const CloseMode mode = cfg.verification.mode;
  const Tier1Result t1 =
      tier1_compare(px.ref_trace.outputs, px.tgt_trace.outputs, tol, mode);
  r.max_abs_diff = t1.stats.max_abs_diff;
  r.mae = t1.stats.mae;
  r.p95_abs_diff = t1.stats.p95_abs_diff;

  if (px.ref_trace.activations.has_value() &&
      px.tgt_trace.activations.has_value()) {
    const auto div = tier2_localize(px.model, *px.ref_trace.activations,
                                    *px.tgt_trace.activations, tol, mode);
    if (div.has_value()) r.tier2_first_divergence = div->node_id;
  }

  const TaskMetrics& t3 = *px.tier3;
  r.task = task_name(t3.task);
  r.top1_match = t3.top1_match;
  r.topk_agreement = t3.topk_agreement;
  r.miou = t3.miou;
  r.detection_f1 = t3.detection_f1;
  r.task_pass = t3.pass;

  r.status = (t1.pass && t3.pass) ? RunStatus::Pass : RunStatus::Fail;

  ClassifyInputs ci;
  ci.status = r.status;
  ci.target_had_fallbacks = !px.tgt_trace.fallback_events.empty();
  ci.tier3 = &t3;
  if (t3.task == TaskKind::Detection) {
    const auto& primary = px.model.outputs.front();
    ci.ref_dets = &px.ref_trace.outputs.at(primary);
    ci.tgt_dets = &px.tgt_trace.outputs.at(primary);
  }
  ci.tol = tol;
  ci.tier3_passes_with_pre_nms_sort = [&cfg, &px] {
    return tier3_retry_pass(cfg, px);
  };
  r.taxonomy = classify_failure(ci);

  r.latency_ms_ref = px.latency_ref;
  r.latency_ms_tgt = px.latency_tgt;
  return r;
}

// One (config, pair) unit: load the config, execute both backends once, and
// evaluate every atol cell against the cached traces. A config that cannot
// even load yields one ERROR record per cell.
inline std::vector<RunRecord> run_unit(const SweepPlan& plan,
                                       std::size_t config_index,
                                       std::size_t pair_index) {
  const std::string& path = plan.config_paths[config_index];
  BackendSpec base_ref = plan.backend_pairs[pair_index].first;
  BackendSpec base_tgt = plan.backend_pairs[pair_index].second;
  if (plan.target_override.has_value()) {
    base_tgt = *plan.target_override == BackendKind::Optimized
                   ? make_optimized_spec()
                   : make_reference_spec();
  }

  std::vector<RunRecord> out;
  RunConfig cfg;
  try {
    cfg = load_config(path);
  } catch (const std::exception& e) {
    for (double atol : plan.atol_grid) {
      RunRecord r;
      r.config = path;
      r.model = "unknown";
      r.backend_pair = base_ref.name + "->" + base_tgt.name;
      r.atol = atol;
      r.rtol = plan.rtol;
      r.status = RunStatus::Error;
      r.taxonomy = FailureCategory::RuntimeError;
      r.seed = plan.seed;
      r.env = env_fingerprint(plan.seed);
      r.error_message = e.what();
      out.push_back(std::move(r));
    }
    return out;
  }

  if (!plan.target_override.has_value() &&
      base_tgt.kind == BackendKind::Optimized && !cfg.options.optimized) {
    base_tgt = make_reference_spec();
  }

  PairExecution px =
      execute_pair(cfg, base_ref, base_tgt, effective_seed(cfg, plan.seed));
  out.reserve(plan.atol_grid.size());
  for (double atol : plan.atol_grid) {
    out.push_back(evaluate_cell(cfg, px, ToleranceSpec{atol, plan.rtol}));
  }
  return out;
}

}  // namespace detail

// One cell with explicit specs. The given pair is authoritative: config
// options choose a pair only at the suite level, while mitigations and the
// optimized-side precision still apply here.
inline RunRecord run_once(const RunConfig& cfg, const BackendSpec& ref,
                          const BackendSpec& tgt, const ToleranceSpec& tol) {
  detail::PairExecution px = detail::execute_pair(cfg, ref, tgt, cfg.seed);
  return detail::evaluate_cell(cfg, px, tol);
}

inline RunRecord run_once(const RunConfig& cfg, const BackendSpec& ref,
                          const BackendSpec& tgt) {
  return run_once(cfg, ref, tgt, cfg.verification.tol);
}

// Executes every (config, pair, atol) cell, appends records to out_path in
// plan order regardless of worker scheduling, and prints one console line per
// cell plus a final summary block.
inline SuiteResult run_suite(const SweepPlan& plan,
                             std::ostream& console = std::cout) {
  validate_plan(plan);
  SuiteResult res;
  if (plan.config_paths.empty()) {
    console << "No configs matched: " << plan.config_pattern << "\n";
    return res;
  }

  const std::size_t n_pairs = plan.backend_pairs.size();
  const std::size_t n_units = plan.config_paths.size() * n_pairs;
  std::vector<std::vector<RunRecord>> unit_records(n_units);
  std::atomic<std::size_t> next_unit{0};
  const auto worker = [&] {
    for (std::size_t u = next_unit.fetch_add(1); u < n_units;
         u = next_unit.fetch_add(1)) {
      unit_records[u] = detail::run_unit(plan, u / n_pairs, u % n_pairs);
    }
  };
  const std::size_t jobs =
      std::min(std::max<std::size_t>(plan.jobs, 1), n_units);
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (std::size_t i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  if (plan.out_path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(plan.out_path.parent_path(), ec);
  }
  std::ofstream(plan.out_path, std::ios::trunc);  // each suite starts fresh

  for (auto& unit : unit_records) {
    for (auto& r : unit) {
      append_record(r, plan.out_path);
      console << "[" << run_status_name(r.status) << "] "
              << std::filesystem::path(r.config).filename().string()
              << " (atol=" << detail::format_double(r.atol)
              << ", rtol=" << detail::format_double(r.rtol) << ")\n";
      res.summary.total += 1;
      switch (r.status) {
        case RunStatus::Pass: res.summary.passed += 1; break;
        case RunStatus::Fail: res.summary.failed += 1; break;
        case RunStatus::Error: res.summary.errored += 1; break;
      }
      res.records.push_back(std::move(r));
    }
  }

  console << "\n=== Summary ===\n";
  console << "Total: " << res.summary.total
          << "  Passed: " << res.summary.passed
          << "  Failed: " << res.summary.failed
          << "  Errored: " << res.summary.errored << "\n";
  return res;
}

}  // namespace driftcheck
