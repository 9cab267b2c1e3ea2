#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "driftcheck/errors.hpp"
#include "driftcheck/graph.hpp"
#include "driftcheck/tensor_io.hpp"

namespace driftcheck {

namespace detail {

using json = nlohmann::json;

inline const json& expect_key(const json& obj, const char* key,
                              const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw FormatError(where + ": missing key \"" + key + "\"");
  }
  return *it;
}

inline void reject_unknown_keys(const json& obj,
                                std::initializer_list<const char*> allowed,
                                const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) {
      if (it.key() == a) {
        ok = true;
        break;
      }
    }
    if (!ok) throw FormatError(where + ": unknown key \"" + it.key() + "\"");
  }
}

inline std::string expect_string(const json& v, const std::string& where) {
  if (!v.is_string()) throw FormatError(where + ": expected a string");
  return v.get<std::string>();
}

inline Shape parse_shape(const json& v, const std::string& where) {
  if (!v.is_array()) throw FormatError(where + ": shape must be an array");
  Shape s;
  for (const auto& e : v) {
    if (!e.is_number_integer() || e.get<std::int64_t>() < 0) {
      throw FormatError(where + ": extents must be non-negative integers");
    }
    s.push_back(e.get<std::int64_t>());
  }
  return s;
}

// Nested numeric arrays carry their own shape; every level must be
// rectangular.
inline void parse_inline(const json& v, std::size_t depth, Shape& shape,
                         std::vector<double>& flat, const std::string& where) {
  if (v.is_number()) {
    if (depth != shape.size()) {
      throw FormatError(where + ": ragged nested array");
    }
    flat.push_back(v.get<double>());
    return;
  }
  if (!v.is_array()) {
    throw FormatError(where + ": inline values must be numbers");
  }
  const auto extent = static_cast<std::int64_t>(v.size());
  if (depth == shape.size()) {
    shape.push_back(extent);
  } else if (shape[depth] != extent) {
    throw FormatError(where + ": ragged nested array");
  }
  for (const auto& e : v) parse_inline(e, depth + 1, shape, flat, where);
}

inline Tensor parse_initializer(const std::string& name, const json& v,
                                const std::filesystem::path& base_dir) {
  const std::string where = "initializer \"" + name + "\"";
  if (!v.is_object()) throw FormatError(where + ": expected an object");
  reject_unknown_keys(v, {"file", "inline", "dtype"}, where);
  const bool has_file = v.contains("file");
  const bool has_inline = v.contains("inline");
  if (has_file == has_inline) {
    throw FormatError(where + ": exactly one of \"file\"/\"inline\" required");
  }
  if (has_file) {
    std::filesystem::path p = expect_string(v["file"], where);
    if (p.is_relative()) p = base_dir / p;
    return read_tensor_file(p.lexically_normal());
  }
  DType dtype = DType::F32;
  if (v.contains("dtype")) {
    const std::string d = expect_string(v["dtype"], where);
    if (d == "f64") {
      dtype = DType::F64;
    } else if (d != "f32") {
      throw FormatError(where + ": dtype must be f32 or f64");
    }
  }
  Shape shape;
  std::vector<double> flat;
  parse_inline(v["inline"], 0, shape, flat, where);
  if (shape_numel(shape) != static_cast<std::int64_t>(flat.size())) {
    throw FormatError(where + ": ragged nested array");
  }
  if (dtype == DType::F64) return Tensor::from_f64(shape, std::move(flat));
  std::vector<float> f(flat.size());
  for (std::size_t i = 0; i < flat.size(); ++i) {
    f[i] = static_cast<float>(flat[i]);
  }
  return Tensor::from_f32(shape, std::move(f));
}

inline json inline_from_tensor(const Tensor& t) {
  // Recursive nested-array encoding of a row-major buffer.
  struct Builder {
    const Tensor& t;
    json build(std::size_t axis, std::int64_t offset,
               const std::vector<std::int64_t>& strides) const {
      if (axis == t.rank()) {
        if (t.dtype() == DType::F32) {
          return static_cast<double>(t.f32()[static_cast<std::size_t>(offset)]);
        }
        return t.f64()[static_cast<std::size_t>(offset)];
      }
      json arr = json::array();
      for (std::int64_t i = 0; i < t.shape()[axis]; ++i) {
        arr.push_back(build(axis + 1, offset + i * strides[axis], strides));
      }
      return arr;
    }
  };
  return Builder{t}.build(0, 0, row_major_strides(t.shape()));
}

}  // namespace detail

inline GraphModel load_model(const nlohmann::json& doc,
                             const std::filesystem::path& base_dir) {
  using detail::expect_key;
  using detail::expect_string;
  if (!doc.is_object()) throw FormatError("model document must be an object");
  detail::reject_unknown_keys(
      doc, {"name", "task", "inputs", "outputs", "nodes", "initializers"},
      "model");

  GraphModel m;
  m.name = expect_string(expect_key(doc, "name", "model"), "model.name");
  const std::string task =
      expect_string(expect_key(doc, "task", "model"), "model.task");
  auto tk = task_from_string(task);
  if (!tk) throw FormatError("model.task: unknown task \"" + task + "\"");
  m.task = *tk;

  const auto& inputs = expect_key(doc, "inputs", "model");
  if (!inputs.is_array()) throw FormatError("model.inputs must be an array");
  for (const auto& in : inputs) {
    if (!in.is_object()) throw FormatError("model.inputs entries are objects");
    detail::reject_unknown_keys(in, {"name", "shape"}, "model input");
    m.inputs.emplace_back(
        expect_string(expect_key(in, "name", "model input"), "input.name"),
        detail::parse_shape(expect_key(in, "shape", "model input"),
                            "input.shape"));
  }

  const auto& outputs = expect_key(doc, "outputs", "model");
  if (!outputs.is_array()) throw FormatError("model.outputs must be an array");
  for (const auto& out : outputs) {
    m.outputs.push_back(expect_string(out, "model.outputs"));
  }

  const auto& nodes = expect_key(doc, "nodes", "model");
  if (!nodes.is_array()) throw FormatError("model.nodes must be an array");
  for (const auto& jn : nodes) {
    if (!jn.is_object()) throw FormatError("model.nodes entries are objects");
    detail::reject_unknown_keys(jn, {"id", "op", "inputs", "output", "attrs"},
                                "node");
    Node n;
    n.id = expect_string(expect_key(jn, "id", "node"), "node.id");
    const std::string opname =
        expect_string(expect_key(jn, "op", "node"), "node.op");
    auto op = op_kind_from_string(opname);
    if (!op) throw UnsupportedOpError(opname);
    n.op = *op;
    const auto& ins = expect_key(jn, "inputs", "node");
    if (!ins.is_array()) throw FormatError("node.inputs must be an array");
    for (const auto& in : ins) n.inputs.push_back(expect_string(in, "node.inputs"));
    n.output = expect_string(expect_key(jn, "output", "node"), "node.output");
    if (jn.contains("attrs")) {
      const auto& attrs = jn["attrs"];
      if (!attrs.is_object()) throw FormatError("node.attrs must be an object");
      for (auto it = attrs.begin(); it != attrs.end(); ++it) {
        if (it->is_number_integer()) {
          n.attrs[it.key()] = it->get<std::int64_t>();
        } else if (it->is_number()) {
          n.attrs[it.key()] = it->get<double>();
        } else {
          throw FormatError("node " + n.id + ": attr \"" + it.key() +
                            "\" must be numeric");
        }
      }
    }
    m.nodes.push_back(std::move(n));
  }

  if (doc.contains("initializers")) {
    const auto& inits = doc["initializers"];
    if (!inits.is_object()) {
      throw FormatError("model.initializers must be an object");
    }
    for (auto it = inits.begin(); it != inits.end(); ++it) {
      m.initializers.emplace(
          it.key(), detail::parse_initializer(it.key(), *it, base_dir));
    }
  }

  validate_model(m);
  infer_shapes(m);  // surfaces inconsistent shapes at load time
  return m;
}

inline GraphModel load_model_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw FormatError("cannot open model file: " + path.string());
  nlohmann::json doc;
  try {
    f >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("model JSON parse error in " + path.string() + ": " +
                      e.what());
  }
  return load_model(doc, path.parent_path());
}

// Canonical, self-contained form: initializers are inlined, attrs keep their
// numeric kind, keys are emitted in sorted order. load_model of this form
// reproduces the model exactly.
inline nlohmann::json serialize_model(const GraphModel& m) {
  using nlohmann::json;
  json doc;
  doc["name"] = m.name;
  doc["task"] = task_name(m.task);
  json inputs = json::array();
  for (const auto& [name, shape] : m.inputs) {
    inputs.push_back({{"name", name}, {"shape", shape}});
  }
  doc["inputs"] = inputs;
  doc["outputs"] = m.outputs;
  json nodes = json::array();
  for (const auto& n : m.nodes) {
    json jn;
    jn["id"] = n.id;
    jn["op"] = op_kind_name(n.op);
    jn["inputs"] = n.inputs;
    jn["output"] = n.output;
    if (!n.attrs.empty()) {
      json attrs;
      for (const auto& [key, value] : n.attrs) {
        if (std::holds_alternative<std::int64_t>(value)) {
          attrs[key] = std::get<std::int64_t>(value);
        } else {
          attrs[key] = std::get<double>(value);
        }
      }
      jn["attrs"] = attrs;
    }
    nodes.push_back(jn);
  }
  doc["nodes"] = nodes;
  if (!m.initializers.empty()) {
    json inits;
    for (const auto& [name, t] : m.initializers) {
      inits[name] = {{"dtype", dtype_name(t.dtype())},
                     {"inline", detail::inline_from_tensor(t)}};
    }
    doc["initializers"] = inits;
  }
  return doc;
}

}  // namespace driftcheck
