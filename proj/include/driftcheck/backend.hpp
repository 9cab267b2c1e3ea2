#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "driftcheck/errors.hpp"
#include "driftcheck/graph.hpp"
#include "driftcheck/half.hpp"
#include "driftcheck/kernels.hpp"

namespace driftcheck {

enum class BackendKind { Reference, Optimized };
enum class Precision { Full, Reduced };

inline const char* backend_kind_name(BackendKind k) {
  return k == BackendKind::Reference ? "reference" : "optimized";
}

inline const char* precision_name(Precision p) {
  return p == Precision::Full ? "full" : "reduced";
}

struct MitigationSet {
  bool pre_nms_sort = false;
  bool force_full_precision = false;
  std::set<OpKind> eager_fallback_ops;
};

struct BackendSpec {
  std::string name = "reference";
  BackendKind kind = BackendKind::Reference;
  Precision precision = Precision::Full;
  ReductionOrder reduction_order = ReductionOrder::Sequential;
  bool fuse_conv_relu = false;
  NmsOrder nms_order = NmsOrder::Stable;
  MitigationSet mitigations;
};

// The reference backend has no knobs: whatever a config says, it runs full
// precision, sequential reduction, unfused, stable ties.
inline BackendSpec make_reference_spec() { return BackendSpec{}; }

inline BackendSpec make_optimized_spec(
    Precision precision = Precision::Full,
    ReductionOrder order = ReductionOrder::Pairwise, bool fuse_conv_relu = true,
    NmsOrder nms_order = NmsOrder::Unstable, MitigationSet mitigations = {}) {
  BackendSpec s;
  s.name = "optimized";
  s.kind = BackendKind::Optimized;
  s.precision = precision;
  s.reduction_order = order;
  s.fuse_conv_relu = fuse_conv_relu;
  s.nms_order = nms_order;
  s.mitigations = std::move(mitigations);
  return s;
}

inline BackendSpec normalized(BackendSpec spec) {
  if (spec.kind == BackendKind::Reference) {
    spec.precision = Precision::Full;
    spec.reduction_order = ReductionOrder::Sequential;
    spec.fuse_conv_relu = false;
    spec.nms_order = NmsOrder::Stable;
    spec.mitigations.eager_fallback_ops.clear();
  }
  return spec;
}

struct FallbackEvent {
  std::string node_id;
  OpKind op;
};

struct ExecutionTrace {
  std::map<std::string, Tensor> outputs;
  std::optional<std::map<std::string, Tensor>> activations;  // node id -> out
  std::vector<double> latencies_ms;
  std::vector<FallbackEvent> fallback_events;
  std::int64_t half_rounding_count = 0;  // node outputs rounded to binary16
};

namespace detail {

struct NodePass {
  const GraphModel& model;
  const BackendSpec& spec;
  bool capture;
  std::map<std::string, Tensor> values;
  std::map<std::string, Tensor> activations;
  std::vector<FallbackEvent> fallbacks;
  std::int64_t roundings = 0;
  std::map<std::string, std::pair<int, OpKind>> consumers;  // count, sole op

  const Tensor& value(const std::string& name, const Node& n) {
    auto it = values.find(name);
    if (it != values.end()) return it->second;
    auto init = model.initializers.find(name);
    if (init != model.initializers.end()) return init->second;
    throw GraphError("node " + n.id + ": missing tensor \"" + name + "\"");
  }

  void run() {
    for (const auto& n : model.nodes) {
      for (const auto& in : n.inputs) {
        auto it = consumers.emplace(in, std::make_pair(0, n.op)).first;
        it->second.first += 1;
        it->second.second = n.op;
      }
    }
    for (const auto& n : model.nodes) eval(n);
  }

  bool falls_back_op(OpKind op) const {
    return spec.kind == BackendKind::Optimized &&
           spec.mitigations.eager_fallback_ops.count(op) > 0;
  }

  bool falls_back(const Node& n) const { return falls_back_op(n.op); }

  // A Conv2d whose only consumer is a Relu forms the fused region: the
  // intermediate stays in registers, so reduced precision rounds once after
  // the Relu instead of twice. An eager fallback on either op breaks the
  // region apart again.
  bool fused_conv(const Node& n) const {
    if (!spec.fuse_conv_relu || n.op != OpKind::Conv2d) return false;
    if (falls_back(n) || falls_back_op(OpKind::Relu)) return false;
    for (const auto& out : model.outputs) {
      if (out == n.output) return false;
    }
    auto it = consumers.find(n.output);
    return it != consumers.end() && it->second.first == 1 &&
           it->second.second == OpKind::Relu;
  }

  void eval(const Node& n) {
    const bool fallback = falls_back(n);
    if (fallback) fallbacks.push_back({n.id, n.op});
    const ReductionOrder order =
        fallback ? ReductionOrder::Sequential : spec.reduction_order;

    Tensor out;
    switch (n.op) {
      case OpKind::Conv2d: {
        const Tensor* bias =
            n.inputs.size() == 3 ? &value(n.inputs[2], n) : nullptr;
        out = run_conv2d(value(n.inputs[0], n), value(n.inputs[1], n), bias,
                         attr_int(n, "stride", 1), attr_int(n, "padding", 0),
                         order);
        break;
      }
      case OpKind::Linear: {
        const Tensor* bias =
            n.inputs.size() == 3 ? &value(n.inputs[2], n) : nullptr;
        out = run_linear(value(n.inputs[0], n), value(n.inputs[1], n), bias,
                         order);
        break;
      }
      case OpKind::Relu:
        out = run_relu(value(n.inputs[0], n));
        break;
      case OpKind::Add:
        out = run_add(value(n.inputs[0], n), value(n.inputs[1], n));
        break;
      case OpKind::Concat: {
        std::vector<const Tensor*> xs;
        xs.reserve(n.inputs.size());
        for (const auto& in : n.inputs) xs.push_back(&value(in, n));
        out = run_concat(xs, attr_int(n, "axis", 0));
        break;
      }
      case OpKind::MaxPool2d: {
        const std::int64_t k = attr_int(n, "kernel", 1);
        out = run_maxpool2d(value(n.inputs[0], n), k, attr_int(n, "stride", k));
        break;
      }
      case OpKind::GlobalAvgPool:
        out = run_global_avg_pool(value(n.inputs[0], n), order);
        break;
      case OpKind::BatchNormAffine:
        out = run_batchnorm_affine(value(n.inputs[0], n), value(n.inputs[1], n),
                                   value(n.inputs[2], n));
        break;
      case OpKind::Softmax:
        out = run_softmax(value(n.inputs[0], n), attr_int(n, "axis", 1), order);
        break;
      case OpKind::Flatten:
        out = run_flatten(value(n.inputs[0], n));
        break;
      case OpKind::BilinearResize:
        out = bilinear_resize(value(n.inputs[0], n), attr_int(n, "out_h", 1),
                              attr_int(n, "out_w", 1));
        break;
      case OpKind::ArgmaxChannel:
        out = run_argmax_channel(value(n.inputs[0], n));
        break;
      case OpKind::Nms: {
        const NmsOrder policy = fallback ? NmsOrder::Stable : spec.nms_order;
        out = run_nms_node(value(n.inputs[0], n), value(n.inputs[1], n),
                           attr_double(n, "iou_threshold", 0.5), policy,
                           spec.mitigations.pre_nms_sort);
        break;
      }
    }

    const bool reduce_precision = spec.precision == Precision::Reduced &&
                                  !spec.mitigations.force_full_precision &&
                                  !fallback;
    if (reduce_precision && !fused_conv(n)) {
      for (auto& v : out.f32()) v = round_to_half(v);
      roundings += 1;
    }
    if (capture) activations.emplace(n.id, out);
    values.emplace(n.output, std::move(out));
  }
};

}  // namespace detail

inline ExecutionTrace execute(const GraphModel& model,
                              const std::map<std::string, Tensor>& inputs,
                              const BackendSpec& raw_spec,
                              bool capture_activations = false,
                              int repeats = 1) {
  if (repeats < 1) throw InvalidConfigError("repeats must be >= 1");
  const BackendSpec spec = normalized(raw_spec);

  for (const auto& [name, shape] : model.inputs) {
    auto it = inputs.find(name);
    if (it == inputs.end()) throw GraphError("missing input: " + name);
    if (it->second.shape() != shape) {
      throw ShapeError("input \"" + name + "\" has shape " +
                       shape_str(it->second.shape()) + ", model expects " +
                       shape_str(shape));
    }
  }

  ExecutionTrace trace;
  for (int rep = 0; rep < repeats; ++rep) {
    const auto t0 = std::chrono::steady_clock::now();
    detail::NodePass pass{model, spec, capture_activations && rep == 0};
    for (const auto& [name, t] : inputs) pass.values.emplace(name, t);
    pass.run();
    const auto t1 = std::chrono::steady_clock::now();
    trace.latencies_ms.push_back(
        std::chrono::duration<double, std::milli>(t1 - t0).count());
    if (rep == 0) {
      for (const auto& out : model.outputs) {
        trace.outputs.emplace(out, pass.values.at(out));
      }
      if (capture_activations) {
        trace.activations = std::move(pass.activations);
      }
      trace.fallback_events = std::move(pass.fallbacks);
      trace.half_rounding_count = pass.roundings;
    }
  }
  return trace;
}

// Median with the lower-of-two rule for even counts. drop_first discards the
// warmup repeat when one was requested.
inline double median_latency_ms(std::vector<double> v, bool drop_first = false) {
  if (drop_first && v.size() > 1) v.erase(v.begin());
  if (v.empty()) throw EmptyReductionError("no latencies recorded");
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}

inline double measure_latency(const ExecutionTrace& trace) {
  return median_latency_ms(trace.latencies_ms);
}

}  // namespace driftcheck
