#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "driftcheck/graph.hpp"
#include "driftcheck/prng.hpp"
#include "driftcheck/tensor.hpp"

namespace driftcheck {

namespace detail {

// Every parameter draws from its own stream, keyed by "<model>/<name>", so a
// topology edit in one place never reshuffles the values elsewhere.
inline Tensor uniform_param(std::uint64_t seed, const std::string& model,
                            const std::string& name, Shape shape,
                            std::int64_t fan_in) {
  const auto scale =
      static_cast<float>(1.0 / std::sqrt(static_cast<double>(fan_in)));
  SplitMix64 g = make_stream(seed, model + "/" + name);
  Tensor t = Tensor::zeros(DType::F32, std::move(shape));
  for (auto& v : t.f32()) v = g.next_symmetric(scale);
  return t;
}

inline Tensor const_vec(std::int64_t n, float value) {
  Tensor t = Tensor::zeros(DType::F32, {n});
  for (auto& v : t.f32()) v = value;
  return t;
}

inline Node node(std::string id, OpKind op, std::vector<std::string> inputs,
                 std::string output, Attrs attrs = {}) {
  return Node{std::move(id), op, std::move(inputs), std::move(output),
              std::move(attrs)};
}

inline void add_conv(GraphModel& m, std::uint64_t seed, const std::string& id,
                     const std::string& in, const std::string& out,
                     std::int64_t cin, std::int64_t cout, std::int64_t k,
                     std::int64_t pad) {
  const std::int64_t fan_in = cin * k * k;
  m.initializers.emplace(id + ".w", uniform_param(seed, m.name, id + ".w",
                                                  {cout, cin, k, k}, fan_in));
  m.initializers.emplace(
      id + ".b", uniform_param(seed, m.name, id + ".b", {cout}, fan_in));
  m.nodes.push_back(node(id, OpKind::Conv2d, {in, id + ".w", id + ".b"}, out,
                         {{"stride", std::int64_t{1}}, {"padding", pad}}));
}

inline void add_linear(GraphModel& m, std::uint64_t seed, const std::string& id,
                       const std::string& in, const std::string& out,
                       std::int64_t fin, std::int64_t fout) {
  m.initializers.emplace(
      id + ".w", uniform_param(seed, m.name, id + ".w", {fout, fin}, fin));
  m.initializers.emplace(
      id + ".b", uniform_param(seed, m.name, id + ".b", {fout}, fin));
  m.nodes.push_back(
      node(id, OpKind::Linear, {in, id + ".w", id + ".b"}, out));
}

}  // namespace detail

// Small CNN classifier over (1,3,32,32), 10 classes.
inline GraphModel build_synthetic_classifier(std::uint64_t seed) {
  using detail::node;
  GraphModel m;
  m.name = "classifier";
  m.task = TaskKind::Classification;
  m.inputs = {{"input", {1, 3, 32, 32}}};
  detail::add_conv(m, seed, "c1", "input", "t1", 3, 8, 3, 1);
  m.nodes.push_back(node("r1", OpKind::Relu, {"t1"}, "t2"));
  m.nodes.push_back(node("p1", OpKind::MaxPool2d, {"t2"}, "t3",
                         {{"kernel", std::int64_t{2}}}));
  detail::add_conv(m, seed, "c2", "t3", "t4", 8, 16, 3, 1);
  m.nodes.push_back(node("r2", OpKind::Relu, {"t4"}, "t5"));
  m.nodes.push_back(node("g1", OpKind::GlobalAvgPool, {"t5"}, "t6"));
  m.nodes.push_back(node("f1", OpKind::Flatten, {"t6"}, "t7"));
  detail::add_linear(m, seed, "l1", "t7", "t8", 16, 10);
  m.nodes.push_back(
      node("s1", OpKind::Softmax, {"t8"}, "probs", {{"axis", std::int64_t{1}}}));
  m.outputs = {"probs"};
  return m;
}

// Encoder/decoder segmenter over (1,3,64,64): downsample, upsample back,
// skip-concat and residual add, 4-class argmax mask.
inline GraphModel build_synthetic_segmenter(std::uint64_t seed) {
  using detail::node;
  GraphModel m;
  m.name = "segmenter";
  m.task = TaskKind::Segmentation;
  m.inputs = {{"input", {1, 3, 64, 64}}};
  detail::add_conv(m, seed, "c1", "input", "e1", 3, 8, 3, 1);
  m.nodes.push_back(node("r1", OpKind::Relu, {"e1"}, "e2"));
  m.nodes.push_back(node("p1", OpKind::MaxPool2d, {"e2"}, "e3",
                         {{"kernel", std::int64_t{2}}}));
  detail::add_conv(m, seed, "c2", "e3", "e4", 8, 16, 3, 1);
  m.nodes.push_back(node("r2", OpKind::Relu, {"e4"}, "e5"));
  m.nodes.push_back(node("u1", OpKind::BilinearResize, {"e5"}, "d1",
                         {{"out_h", std::int64_t{64}},
                          {"out_w", std::int64_t{64}}}));
  m.nodes.push_back(node("cat", OpKind::Concat, {"e2", "d1"}, "d2",
                         {{"axis", std::int64_t{1}}}));
  detail::add_conv(m, seed, "c3", "d2", "d3", 24, 8, 3, 1);
  m.nodes.push_back(node("r3", OpKind::Relu, {"d3"}, "d4"));
  m.nodes.push_back(node("a1", OpKind::Add, {"d4", "e2"}, "d5"));
  detail::add_conv(m, seed, "c4", "d5", "logits", 8, 4, 3, 1);
  m.nodes.push_back(node("am", OpKind::ArgmaxChannel, {"logits"}, "mask"));
  m.outputs = {"mask"};
  return m;
}

// Detector over (1,3,64,64): conv backbone, box head emitting 64 candidates
// on an 8x8 grid of coordinate priors (so candidate boxes are disjoint and
// well-separated in [0,100]), score head, greedy NMS. The two affine+relu
// pairs after the box head clamp coordinates into [0,100]; the clamps are
// monotone, so x1 <= x2 and y1 <= y2 survive them.
inline GraphModel build_synthetic_detector(std::uint64_t seed) {
  using detail::node;
  GraphModel m;
  m.name = "detector";
  m.task = TaskKind::Detection;
  m.inputs = {{"input", {1, 3, 64, 64}}};
  detail::add_conv(m, seed, "c1", "input", "b1", 3, 8, 3, 1);
  m.nodes.push_back(node("r1", OpKind::Relu, {"b1"}, "b2"));
  m.nodes.push_back(node("p1", OpKind::MaxPool2d, {"b2"}, "b3",
                         {{"kernel", std::int64_t{2}}}));
  detail::add_conv(m, seed, "c2", "b3", "b4", 8, 16, 3, 1);
  m.nodes.push_back(node("r2", OpKind::Relu, {"b4"}, "b5"));
  m.nodes.push_back(node("p2", OpKind::MaxPool2d, {"b5"}, "b6",
                         {{"kernel", std::int64_t{2}}}));
  m.nodes.push_back(node("fl", OpKind::Flatten, {"b6"}, "feat"));
  detail::add_linear(m, seed, "l1", "feat", "h1", 16 * 16 * 16, 128);
  m.nodes.push_back(node("r3", OpKind::Relu, {"h1"}, "h2"));

  // Box head: random weights, structured bias = per-candidate coordinate
  // prior (x1, y1, x2, y2) interleaved, 12 apart on the grid, 8 wide.
  m.initializers.emplace(
      "lb.w", detail::uniform_param(seed, m.name, "lb.w", {256, 128}, 128));
  {
    Tensor b = Tensor::zeros(DType::F32, {256});
    for (std::int64_t i = 0; i < 64; ++i) {
      const auto gx = static_cast<float>(i % 8);
      const auto gy = static_cast<float>(i / 8);
      b.f32()[static_cast<std::size_t>(4 * i + 0)] = 2.0f + 12.0f * gx;
      b.f32()[static_cast<std::size_t>(4 * i + 1)] = 2.0f + 12.0f * gy;
      b.f32()[static_cast<std::size_t>(4 * i + 2)] = 10.0f + 12.0f * gx;
      b.f32()[static_cast<std::size_t>(4 * i + 3)] = 10.0f + 12.0f * gy;
    }
    m.initializers.emplace("lb.b", std::move(b));
  }
  m.nodes.push_back(
      node("lb", OpKind::Linear, {"h2", "lb.w", "lb.b"}, "box_raw"));
  m.nodes.push_back(node("rb1", OpKind::Relu, {"box_raw"}, "box_lo"));
  m.initializers.emplace("bnA.s", detail::const_vec(256, -1.0f));
  m.initializers.emplace("bnA.b", detail::const_vec(256, 100.0f));
  m.nodes.push_back(node("bnA", OpKind::BatchNormAffine,
                         {"box_lo", "bnA.s", "bnA.b"}, "box_flip"));
  m.nodes.push_back(node("rb2", OpKind::Relu, {"box_flip"}, "box_hi"));
  m.initializers.emplace("bnB.s", detail::const_vec(256, -1.0f));
  m.initializers.emplace("bnB.b", detail::const_vec(256, 100.0f));
  m.nodes.push_back(node("bnB", OpKind::BatchNormAffine,
                         {"box_hi", "bnB.s", "bnB.b"}, "boxes"));

  detail::add_linear(m, seed, "ls", "h2", "scores", 128, 64);
  m.nodes.push_back(node("nms", OpKind::Nms, {"boxes", "scores"}, "dets",
                         {{"iou_threshold", 0.5}}));
  m.outputs = {"dets"};
  return m;
}

inline GraphModel build_builtin(const std::string& name, std::uint64_t seed) {
  if (name == "classifier") return build_synthetic_classifier(seed);
  if (name == "segmenter") return build_synthetic_segmenter(seed);
  if (name == "detector") return build_synthetic_detector(seed);
  throw InvalidConfigError("unknown builtin model: " + name);
}

}  // namespace driftcheck
