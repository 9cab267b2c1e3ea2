#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "driftcheck/errors.hpp"
#include "driftcheck/graph.hpp"
#include "driftcheck/metrics.hpp"
#include "driftcheck/stats.hpp"
#include "driftcheck/tensor.hpp"

namespace driftcheck {

enum class RunStatus { Pass, Fail, Error };

inline const char* run_status_name(RunStatus s) {
  switch (s) {
    case RunStatus::Pass: return "PASS";
    case RunStatus::Fail: return "FAIL";
    case RunStatus::Error: return "ERROR";
  }
  return "ERROR";
}

enum class FailureCategory {
  None,
  NumericDrift,
  OrderTiebreak,
  UnsupportedOp,
  RuntimeError,
};

inline const char* failure_category_name(FailureCategory c) {
  switch (c) {
    case FailureCategory::None: return "NONE";
    case FailureCategory::NumericDrift: return "NUMERIC_DRIFT";
    case FailureCategory::OrderTiebreak: return "ORDER_TIEBREAK";
    case FailureCategory::UnsupportedOp: return "UNSUPPORTED_OP";
    case FailureCategory::RuntimeError: return "RUNTIME_ERROR";
  }
  return "RUNTIME_ERROR";
}

struct Tier1Result {
  DiffStats stats;  // field-wise worst case across all outputs
  bool pass = false;
  CloseMode mode = CloseMode::Eq1;
};

// Compares output sets by name. pass requires every output to satisfy the
// closeness mode; the reported stats take each field's maximum across
// outputs, so they describe the worst output, not an average.
inline Tier1Result tier1_compare(const std::map<std::string, Tensor>& ref,
                                 const std::map<std::string, Tensor>& tgt,
                                 const ToleranceSpec& tol, CloseMode mode) {
  if (ref.size() != tgt.size()) {
    throw ShapeError("output count mismatch: reference has " +
                     std::to_string(ref.size()) + ", target has " +
                     std::to_string(tgt.size()));
  }
  if (ref.empty()) throw ShapeError("no outputs to compare");
  Tier1Result r;
  r.mode = mode;
  r.pass = true;
  bool first = true;
  for (const auto& [name, rt] : ref) {
    auto it = tgt.find(name);
    if (it == tgt.end()) throw ShapeError("target missing output: " + name);
    const DiffStats s = compute_diff_stats(rt, it->second);
    r.pass = r.pass && allclose(rt, it->second, tol, mode);
    if (first) {
      r.stats = s;
      first = false;
    } else {
      r.stats.max_abs_diff = std::max(r.stats.max_abs_diff, s.max_abs_diff);
      r.stats.mae = std::max(r.stats.mae, s.mae);
      r.stats.p95_abs_diff = std::max(r.stats.p95_abs_diff, s.p95_abs_diff);
      r.stats.ref_inf_norm = std::max(r.stats.ref_inf_norm, s.ref_inf_norm);
      r.stats.numel = std::max(r.stats.numel, s.numel);
    }
  }
  return r;
}

struct Divergence {
  std::string node_id;
  std::size_t node_index = 0;  // topological position
  double max_abs_diff = 0.0;
};

// Earliest node in topological order whose captured activation violates
// the closeness mode; absent when every node agrees.
inline std::optional<Divergence> tier2_localize(
    const GraphModel& model, const std::map<std::string, Tensor>& ref_acts,
    const std::map<std::string, Tensor>& tgt_acts, const ToleranceSpec& tol,
    CloseMode mode = CloseMode::Eq1) {
  if (ref_acts.size() != tgt_acts.size()) {
    throw GraphError("activation traces cover different node sets");
  }
  for (std::size_t i = 0; i < model.nodes.size(); ++i) {
    const std::string& id = model.nodes[i].id;
    auto r = ref_acts.find(id);
    auto t = tgt_acts.find(id);
    if (r == ref_acts.end() || t == tgt_acts.end()) {
      throw GraphError("activation trace missing node: " + id);
    }
    if (!allclose(r->second, t->second, tol, mode)) {
      const DiffStats s = compute_diff_stats(r->second, t->second);
      return Divergence{id, i, s.max_abs_diff};
    }
  }
  return std::nullopt;
}

// Task-level pass thresholds; the defaults are deliberately strict for
// detection, where any set difference counts as disagreement.
struct TaskThresholds {
  std::size_t top_k = 5;
  double topk_agreement = 0.8;  // classification, alongside required top-1
  double miou = 0.99;           // segmentation
  double detection_f1 = 1.0;    // detection
  double match_iou = 0.5;       // detection matching criterion
};

struct TaskMetrics {
  TaskKind task = TaskKind::Classification;
  std::optional<bool> top1_match;
  std::optional<double> topk_agreement;
  std::optional<double> miou;
  std::optional<double> detection_f1;
  bool pass = false;
};

// Tier-3 task metric between the task outputs of the two backends.
inline TaskMetrics evaluate_task(TaskKind task, const Tensor& ref,
                                 const Tensor& tgt,
                                 const TaskThresholds& th = {}) {
  TaskMetrics m;
  m.task = task;
  switch (task) {
    case TaskKind::Classification: {
      const auto r = topk_agreement(ref.f32(), tgt.f32(), th.top_k);
      m.top1_match = r.top1_match;
      m.topk_agreement = r.agreement;
      m.pass = r.top1_match && r.agreement >= th.topk_agreement;
      break;
    }
    case TaskKind::Segmentation: {
      const auto rl = labels_from_mask(ref);
      const auto tl = labels_from_mask(tgt);
      int num_classes = 1;
      for (const auto* v : {&rl, &tl}) {
        for (int label : *v) num_classes = std::max(num_classes, label + 1);
      }
      m.miou = miou(rl, tl, num_classes);
      m.pass = *m.miou >= th.miou;
      break;
    }
    case TaskKind::Detection: {
      m.detection_f1 = detection_f1(ref, tgt, th.match_iou);
      m.pass = *m.detection_f1 >= th.detection_f1;
      break;
    }
  }
  return m;
}

// Unordered multiset equality of (box, score) rows up to Eq. 1 applied per
// field. Used to recognize pure reordering of otherwise identical
// detections.
inline bool detections_set_equal(const Tensor& ref_dets,
                                 const Tensor& tgt_dets,
                                 const ToleranceSpec& tol) {
  if (ref_dets.shape() != tgt_dets.shape()) return false;
  if (ref_dets.shape().size() != 2 || ref_dets.shape()[1] != 5) return false;
  const auto& rv = ref_dets.f32();
  const auto& tv = tgt_dets.f32();
  const std::size_t n = std::size_t(ref_dets.shape()[0]);
  const auto rows_match = [&](std::size_t i, std::size_t j) {
    for (std::size_t c = 0; c < 5; ++c) {
      const double r = rv[5 * i + c];
      const double t = tv[5 * j + c];
      if (std::fabs(r - t) > tol.atol + tol.rtol * std::fabs(r)) return false;
    }
    return true;
  };
  std::vector<char> taken(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    bool matched = false;
    for (std::size_t j = 0; j < n; ++j) {
      if (!taken[j] && rows_match(i, j)) {
        taken[j] = 1;
        matched = true;
        break;
      }
    }
    if (!matched) return false;
  }
  return true;
}

struct ClassifyInputs {
  RunStatus status = RunStatus::Pass;
  bool error_was_unsupported_op = false;  // ERROR cause
  bool target_had_fallbacks = false;      // FallbackEvents on the target
  const TaskMetrics* tier3 = nullptr;     // null when tier-3 did not run
  const Tensor* ref_dets = nullptr;       // detection outputs, when relevant
  const Tensor* tgt_dets = nullptr;
  ToleranceSpec tol;
  // Lazy probe: re-run the target with pre_nms_sort and report whether
  // tier-3 then passes. Empty when no retry is possible.
  std::function<bool()> tier3_passes_with_pre_nms_sort;
};

// Maps a completed (or failed) run to exactly one category:
//   ERROR  -> UNSUPPORTED_OP when the raised error was about an op the
//             backend cannot run, RUNTIME_ERROR otherwise;
//   PASS   -> NONE;
//   FAIL   -> UNSUPPORTED_OP when the target took fallbacks, else
//             ORDER_TIEBREAK when a failing detection tier-3 is explained
//             purely by ordering (the kept sets are equal as unordered
//             sets, or canonical pre-sorting makes tier-3 pass), else
//             NUMERIC_DRIFT.
inline FailureCategory classify_failure(const ClassifyInputs& in) {
  if (in.status == RunStatus::Error) {
    return in.error_was_unsupported_op ? FailureCategory::UnsupportedOp
                                       : FailureCategory::RuntimeError;
  }
  if (in.status == RunStatus::Pass) return FailureCategory::None;
  if (in.target_had_fallbacks) return FailureCategory::UnsupportedOp;
  if (in.tier3 != nullptr && !in.tier3->pass &&
      in.tier3->task == TaskKind::Detection) {
    if (in.ref_dets != nullptr && in.tgt_dets != nullptr &&
        detections_set_equal(*in.ref_dets, *in.tgt_dets, in.tol)) {
      return FailureCategory::OrderTiebreak;
    }
    if (in.tier3_passes_with_pre_nms_sort &&
        in.tier3_passes_with_pre_nms_sort()) {
      return FailureCategory::OrderTiebreak;
    }
  }
  return FailureCategory::NumericDrift;
}

struct VerificationReport {
  Tier1Result tier1;
  std::optional<Divergence> tier2;
  std::optional<TaskMetrics> tier3;
  FailureCategory taxonomy = FailureCategory::None;
  RunStatus status = RunStatus::Pass;
};

}  // namespace driftcheck
