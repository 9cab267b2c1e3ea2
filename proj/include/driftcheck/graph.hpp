#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "driftcheck/errors.hpp"
#include "driftcheck/tensor.hpp"

namespace driftcheck {

enum class OpKind {
  Conv2d,
  Linear,
  Relu,
  Add,
  Concat,
  MaxPool2d,
  GlobalAvgPool,
  BatchNormAffine,
  Softmax,
  Flatten,
  BilinearResize,
  ArgmaxChannel,
  Nms,
};

inline const char* op_kind_name(OpKind op) {
  switch (op) {
    case OpKind::Conv2d: return "Conv2d";
    case OpKind::Linear: return "Linear";
    case OpKind::Relu: return "Relu";
    case OpKind::Add: return "Add";
    case OpKind::Concat: return "Concat";
    case OpKind::MaxPool2d: return "MaxPool2d";
    case OpKind::GlobalAvgPool: return "GlobalAvgPool";
    case OpKind::BatchNormAffine: return "BatchNormAffine";
    case OpKind::Softmax: return "Softmax";
    case OpKind::Flatten: return "Flatten";
    case OpKind::BilinearResize: return "BilinearResize";
    case OpKind::ArgmaxChannel: return "ArgmaxChannel";
    case OpKind::Nms: return "Nms";
  }
  return "?";
}

inline const std::vector<OpKind>& all_op_kinds() {
  static const std::vector<OpKind> kinds = {
      OpKind::Conv2d,        OpKind::Linear,       OpKind::Relu,
      OpKind::Add,           OpKind::Concat,       OpKind::MaxPool2d,
      OpKind::GlobalAvgPool, OpKind::BatchNormAffine, OpKind::Softmax,
      OpKind::Flatten,       OpKind::BilinearResize,  OpKind::ArgmaxChannel,
      OpKind::Nms,
  };
  return kinds;
}

// The enumeration is closed on purpose: an unrecognized name is a load-time
// failure, so "partial operator support" is attributable, never silent.
inline std::optional<OpKind> op_kind_from_string(const std::string& name) {
  for (OpKind k : all_op_kinds()) {
    if (name == op_kind_name(k)) return k;
  }
  return std::nullopt;
}

enum class TaskKind { Classification, Segmentation, Detection };

inline const char* task_name(TaskKind t) {
  switch (t) {
    case TaskKind::Classification: return "classification";
    case TaskKind::Segmentation: return "segmentation";
    case TaskKind::Detection: return "detection";
  }
  return "?";
}

inline std::optional<TaskKind> task_from_string(const std::string& s) {
  if (s == "classification") return TaskKind::Classification;
  if (s == "segmentation") return TaskKind::Segmentation;
  if (s == "detection") return TaskKind::Detection;
  return std::nullopt;
}

// Attribute values keep their JSON numeric kind so serialization round-trips
// exactly (2 stays an integer, 0.5 stays a float).
using AttrValue = std::variant<std::int64_t, double>;
using Attrs = std::map<std::string, AttrValue>;

struct Node {
  std::string id;
  OpKind op;
  std::vector<std::string> inputs;
  std::string output;
  Attrs attrs;
};

struct GraphModel {
  std::string name;
  TaskKind task = TaskKind::Classification;
  std::vector<std::pair<std::string, Shape>> inputs;
  std::vector<std::string> outputs;
  std::vector<Node> nodes;  // topological order
  std::map<std::string, Tensor> initializers;
};

inline std::int64_t attr_int(const Node& n, const std::string& key,
                             std::int64_t fallback) {
  auto it = n.attrs.find(key);
  if (it == n.attrs.end()) return fallback;
  return std::get<std::int64_t>(it->second);
}

inline double attr_double(const Node& n, const std::string& key,
                          double fallback) {
  auto it = n.attrs.find(key);
  if (it == n.attrs.end()) return fallback;
  if (std::holds_alternative<std::int64_t>(it->second)) {
    return static_cast<double>(std::get<std::int64_t>(it->second));
  }
  return std::get<double>(it->second);
}

namespace detail {

struct AttrSchema {
  const char* key;
  bool required;
  bool integer;  // false: any numeric
};

inline const std::vector<AttrSchema>& attr_schema(OpKind op) {
  static const std::vector<AttrSchema> none = {};
  static const std::vector<AttrSchema> conv = {{"stride", false, true},
                                               {"padding", false, true}};
  static const std::vector<AttrSchema> pool = {{"kernel", true, true},
                                               {"stride", false, true}};
  static const std::vector<AttrSchema> concat = {{"axis", true, true}};
  static const std::vector<AttrSchema> softmax = {{"axis", false, true}};
  static const std::vector<AttrSchema> resize = {{"out_h", true, true},
                                                 {"out_w", true, true}};
  static const std::vector<AttrSchema> nms = {{"iou_threshold", false, false}};
  switch (op) {
    case OpKind::Conv2d: return conv;
    case OpKind::MaxPool2d: return pool;
    case OpKind::Concat: return concat;
    case OpKind::Softmax: return softmax;
    case OpKind::BilinearResize: return resize;
    case OpKind::Nms: return nms;
    default: return none;
  }
}

inline void expected_arity(OpKind op, std::size_t& lo, std::size_t& hi) {
  switch (op) {
    case OpKind::Conv2d:
    case OpKind::Linear: lo = 2; hi = 3; return;      // x, weight[, bias]
    case OpKind::Add: lo = hi = 2; return;
    case OpKind::Concat: lo = 2; hi = SIZE_MAX; return;
    case OpKind::BatchNormAffine: lo = hi = 3; return;  // x, scale, shift
    case OpKind::Nms: lo = hi = 2; return;              // boxes, scores
    default: lo = hi = 1; return;
  }
}

}  // namespace detail

inline void validate_node_attrs(const Node& n) {
  const auto& schema = detail::attr_schema(n.op);
  for (const auto& [key, value] : n.attrs) {
    const detail::AttrSchema* match = nullptr;
    for (const auto& s : schema) {
      if (key == s.key) {
        match = &s;
        break;
      }
    }
    if (!match) {
      throw GraphError("node " + n.id + ": unknown attr \"" + key + "\" for " +
                       op_kind_name(n.op));
    }
    if (match->integer && !std::holds_alternative<std::int64_t>(value)) {
      throw GraphError("node " + n.id + ": attr \"" + key +
                       "\" must be an integer");
    }
  }
  for (const auto& s : schema) {
    if (s.required && n.attrs.find(s.key) == n.attrs.end()) {
      throw GraphError("node " + n.id + ": missing attr \"" +
                       std::string(s.key) + "\"");
    }
  }
}

// Structural validation: arity and attr schemas per op, SSA-style naming
// (each tensor name defined exactly once), topological order of uses, and
// resolvable graph outputs.
inline void validate_model(const GraphModel& m) {
  std::set<std::string> ids;
  std::set<std::string> defined;
  for (const auto& [name, shape] : m.inputs) {
    if (!defined.insert(name).second) {
      throw GraphError("duplicate input name: " + name);
    }
  }
  for (const auto& [name, t] : m.initializers) {
    if (!defined.insert(name).second) {
      throw GraphError("initializer name collides: " + name);
    }
  }
  if (m.inputs.empty()) throw GraphError("model has no inputs");

  for (const auto& n : m.nodes) {
    if (!ids.insert(n.id).second) {
      throw GraphError("duplicate node id: " + n.id);
    }
    std::size_t lo, hi;
    detail::expected_arity(n.op, lo, hi);
    if (n.inputs.size() < lo || n.inputs.size() > hi) {
      throw GraphError("node " + n.id + ": " + op_kind_name(n.op) +
                       " takes between " + std::to_string(lo) + " and " +
                       std::to_string(hi == SIZE_MAX ? 99 : hi) +
                       " inputs, got " + std::to_string(n.inputs.size()));
    }
    validate_node_attrs(n);
    for (const auto& in : n.inputs) {
      if (defined.find(in) == defined.end()) {
        throw GraphError("node " + n.id + " consumes undefined tensor \"" +
                         in + "\"");
      }
    }
    if (!defined.insert(n.output).second) {
      throw GraphError("node " + n.id + " redefines tensor \"" + n.output +
                       "\"");
    }
  }
  if (m.outputs.empty()) throw GraphError("model has no outputs");
  for (const auto& out : m.outputs) {
    if (defined.find(out) == defined.end()) {
      throw GraphError("graph output \"" + out + "\" is never defined");
    }
  }
}

// Static shapes for every tensor name. The Nms entry is an upper bound
// (N, 5): the kept count is data-dependent, so execution may produce fewer
// rows; every other op's entry is exact.
inline std::map<std::string, Shape> infer_shapes(const GraphModel& m) {
  std::map<std::string, Shape> shapes;
  for (const auto& [name, shape] : m.inputs) shapes[name] = shape;
  for (const auto& [name, t] : m.initializers) shapes[name] = t.shape();

  auto get = [&](const Node& n, std::size_t i) -> const Shape& {
    return shapes.at(n.inputs[i]);
  };
  auto fail = [](const Node& n, const std::string& why) -> void {
    throw ShapeError("node " + n.id + " (" + op_kind_name(n.op) + "): " + why);
  };

  for (const auto& n : m.nodes) {
    Shape out;
    switch (n.op) {
      case OpKind::Conv2d: {
        const Shape& x = get(n, 0);
        const Shape& w = get(n, 1);
        if (x.size() != 4) fail(n, "input must be rank 4");
        if (w.size() != 4) fail(n, "weight must be rank 4");
        if (x[1] != w[1]) fail(n, "channel mismatch");
        const std::int64_t stride = attr_int(n, "stride", 1);
        const std::int64_t pad = attr_int(n, "padding", 0);
        if (stride < 1) fail(n, "stride must be >= 1");
        if (pad < 0) fail(n, "padding must be >= 0");
        const std::int64_t oh = (x[2] + 2 * pad - w[2]) / stride + 1;
        const std::int64_t ow = (x[3] + 2 * pad - w[3]) / stride + 1;
        if (x[2] + 2 * pad < w[2] || x[3] + 2 * pad < w[3]) {
          fail(n, "kernel larger than padded input");
        }
        if (n.inputs.size() == 3 &&
            (get(n, 2).size() != 1 || get(n, 2)[0] != w[0])) {
          fail(n, "bias must have one entry per output channel");
        }
        out = {x[0], w[0], oh, ow};
        break;
      }
      case OpKind::Linear: {
        const Shape& x = get(n, 0);
        const Shape& w = get(n, 1);
        if (x.size() != 2) fail(n, "input must be rank 2");
        if (w.size() != 2) fail(n, "weight must be rank 2");
        if (x[1] != w[1]) fail(n, "feature mismatch");
        if (n.inputs.size() == 3 &&
            (get(n, 2).size() != 1 || get(n, 2)[0] != w[0])) {
          fail(n, "bias must have one entry per output feature");
        }
        out = {x[0], w[0]};
        break;
      }
      case OpKind::Relu:
        out = get(n, 0);
        break;
      case OpKind::Add: {
        if (get(n, 0) != get(n, 1)) fail(n, "operand shapes differ");
        out = get(n, 0);
        break;
      }
      case OpKind::Concat: {
        const std::int64_t axis = attr_int(n, "axis", 0);
        const Shape& first = get(n, 0);
        if (axis < 0 || axis >= static_cast<std::int64_t>(first.size())) {
          fail(n, "axis out of range");
        }
        out = first;
        for (std::size_t i = 1; i < n.inputs.size(); ++i) {
          const Shape& s = get(n, i);
          if (s.size() != first.size()) fail(n, "rank mismatch");
          for (std::size_t d = 0; d < s.size(); ++d) {
            if (static_cast<std::int64_t>(d) == axis) continue;
            if (s[d] != first[d]) fail(n, "non-axis extent mismatch");
          }
          out[static_cast<std::size_t>(axis)] +=
              s[static_cast<std::size_t>(axis)];
        }
        break;
      }
      case OpKind::MaxPool2d: {
        const Shape& x = get(n, 0);
        if (x.size() != 4) fail(n, "input must be rank 4");
        const std::int64_t k = attr_int(n, "kernel", 1);
        const std::int64_t stride = attr_int(n, "stride", k);
        if (k < 1 || stride < 1) fail(n, "kernel and stride must be >= 1");
        if (x[2] < k || x[3] < k) fail(n, "kernel larger than input");
        out = {x[0], x[1], (x[2] - k) / stride + 1, (x[3] - k) / stride + 1};
        break;
      }
      case OpKind::GlobalAvgPool: {
        const Shape& x = get(n, 0);
        if (x.size() != 4) fail(n, "input must be rank 4");
        out = {x[0], x[1], 1, 1};
        break;
      }
      case OpKind::BatchNormAffine: {
        const Shape& x = get(n, 0);
        if (x.size() < 2) fail(n, "input must have a channel axis");
        const Shape& scale = get(n, 1);
        const Shape& shift = get(n, 2);
        if (scale.size() != 1 || scale[0] != x[1]) {
          fail(n, "scale must have one entry per channel");
        }
        if (shift != scale) fail(n, "shift shape must match scale");
        out = x;
        break;
      }
      case OpKind::Softmax: {
        const Shape& x = get(n, 0);
        const std::int64_t axis = attr_int(n, "axis", 1);
        if (axis < 0 || axis >= static_cast<std::int64_t>(x.size())) {
          fail(n, "axis out of range");
        }
        out = x;
        break;
      }
      case OpKind::Flatten: {
        const Shape& x = get(n, 0);
        if (x.size() < 2) fail(n, "input must be at least rank 2");
        std::int64_t rest = 1;
        for (std::size_t i = 1; i < x.size(); ++i) rest *= x[i];
        out = {x[0], rest};
        break;
      }
      case OpKind::BilinearResize: {
        const Shape& x = get(n, 0);
        if (x.size() != 4) fail(n, "input must be rank 4");
        const std::int64_t oh = attr_int(n, "out_h", 0);
        const std::int64_t ow = attr_int(n, "out_w", 0);
        if (oh < 1 || ow < 1) fail(n, "output extents must be >= 1");
        out = {x[0], x[1], oh, ow};
        break;
      }
      case OpKind::ArgmaxChannel: {
        const Shape& x = get(n, 0);
        if (x.size() != 4) fail(n, "input must be rank 4");
        out = {x[0], 1, x[2], x[3]};
        break;
      }
      case OpKind::Nms: {
        const std::int64_t nb = shape_numel(get(n, 0));
        const std::int64_t ns = shape_numel(get(n, 1));
        if (nb % 4 != 0) fail(n, "boxes element count must be divisible by 4");
        if (ns != nb / 4) fail(n, "one score per box required");
        out = {nb / 4, 5};  // upper bound; kept count is data-dependent
        break;
      }
    }
    shapes[n.output] = out;
  }
  return shapes;
}

}  // namespace driftcheck
