#include "driftcheck/graph.hpp"

#include <gtest/gtest.h>

#include <set>

#include "driftcheck/builders.hpp"

using namespace driftcheck;

namespace {

GraphModel relu_chain() {
  GraphModel m;
  m.name = "tiny";
  m.task = TaskKind::Classification;
  m.inputs = {{"x", {1, 4}}};
  m.nodes.push_back({"r1", OpKind::Relu, {"x"}, "y", {}});
  m.outputs = {"y"};
  return m;
}

}  // namespace

TEST(OpKind, NamesRoundTrip) {
  for (OpKind k : all_op_kinds()) {
    auto back = op_kind_from_string(op_kind_name(k));
    ASSERT_TRUE(back.has_value());
    EXPECT_EQ(*back, k);
  }
  EXPECT_FALSE(op_kind_from_string("FancyAttention").has_value());
}

TEST(Validate, AcceptsMinimalChain) {
  EXPECT_NO_THROW(validate_model(relu_chain()));
}

TEST(Validate, DuplicateNodeIdRejected) {
  GraphModel m = relu_chain();
  m.nodes.push_back({"r1", OpKind::Relu, {"y"}, "z", {}});
  m.outputs = {"z"};
  EXPECT_THROW(validate_model(m), GraphError);
}

TEST(Validate, UseBeforeDefinitionRejected) {
  GraphModel m = relu_chain();
  // r0 consumes the output of the later node r1.
  m.nodes.insert(m.nodes.begin(), {"r0", OpKind::Relu, {"y"}, "w", {}});
  EXPECT_THROW(validate_model(m), GraphError);
}

TEST(Validate, RedefinitionRejected) {
  GraphModel m = relu_chain();
  m.nodes.push_back({"r2", OpKind::Relu, {"y"}, "y", {}});
  EXPECT_THROW(validate_model(m), GraphError);
}

TEST(Validate, UnknownOutputRejected) {
  GraphModel m = relu_chain();
  m.outputs = {"nope"};
  EXPECT_THROW(validate_model(m), GraphError);
}

TEST(Validate, ArityChecked) {
  GraphModel m = relu_chain();
  m.nodes[0].inputs = {"x", "x"};  // Relu takes one input
  EXPECT_THROW(validate_model(m), GraphError);
}

TEST(Validate, UnknownAttrRejected) {
  GraphModel m = relu_chain();
  m.nodes[0].attrs["stride"] = std::int64_t{1};
  EXPECT_THROW(validate_model(m), GraphError);
}

TEST(Validate, MissingRequiredAttrRejected) {
  GraphModel m;
  m.name = "p";
  m.inputs = {{"x", {1, 1, 4, 4}}};
  m.nodes.push_back({"p1", OpKind::MaxPool2d, {"x"}, "y", {}});  // no kernel
  m.outputs = {"y"};
  EXPECT_THROW(validate_model(m), GraphError);
}

TEST(InferShapes, ConvArithmetic) {
  GraphModel m;
  m.name = "conv";
  m.inputs = {{"x", {1, 8, 32, 32}}};
  m.initializers.emplace("w", Tensor::zeros(DType::F32, {16, 8, 3, 3}));
  m.nodes.push_back({"c", OpKind::Conv2d, {"x", "w"}, "y",
                     {{"stride", std::int64_t{1}}, {"padding", std::int64_t{1}}}});
  m.outputs = {"y"};
  auto shapes = infer_shapes(m);
  EXPECT_EQ(shapes.at("y"), (Shape{1, 16, 32, 32}));
}

TEST(InferShapes, ConvStrideFloor) {
  GraphModel m;
  m.name = "conv";
  m.inputs = {{"x", {1, 1, 7, 7}}};
  m.initializers.emplace("w", Tensor::zeros(DType::F32, {1, 1, 3, 3}));
  m.nodes.push_back({"c", OpKind::Conv2d, {"x", "w"}, "y",
                     {{"stride", std::int64_t{2}}}});
  m.outputs = {"y"};
  // (7 + 0 - 3)/2 + 1 = 3
  EXPECT_EQ(infer_shapes(m).at("y"), (Shape{1, 1, 3, 3}));
}

TEST(InferShapes, FlattenAndPools) {
  GraphModel m;
  m.name = "fp";
  m.inputs = {{"x", {1, 16, 4, 4}}};
  m.nodes.push_back({"f", OpKind::Flatten, {"x"}, "flat", {}});
  m.nodes.push_back({"g", OpKind::GlobalAvgPool, {"x"}, "gap", {}});
  m.nodes.push_back({"p", OpKind::MaxPool2d, {"x"}, "pool",
                     {{"kernel", std::int64_t{2}}}});
  m.outputs = {"flat", "gap", "pool"};
  auto shapes = infer_shapes(m);
  EXPECT_EQ(shapes.at("flat"), (Shape{1, 256}));
  EXPECT_EQ(shapes.at("gap"), (Shape{1, 16, 1, 1}));
  EXPECT_EQ(shapes.at("pool"), (Shape{1, 16, 2, 2}));
}

TEST(InferShapes, ChannelMismatchNamesNode) {
  GraphModel m;
  m.name = "bad";
  m.inputs = {{"x", {1, 4, 8, 8}}};
  m.initializers.emplace("w", Tensor::zeros(DType::F32, {8, 3, 3, 3}));
  m.nodes.push_back({"c9", OpKind::Conv2d, {"x", "w"}, "y", {}});
  m.outputs = {"y"};
  try {
    infer_shapes(m);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("c9"), std::string::npos);
  }
}

TEST(InferShapes, NmsUpperBound) {
  GraphModel m;
  m.name = "nms";
  m.task = TaskKind::Detection;
  m.inputs = {{"boxes", {1, 256}}, {"scores", {1, 64}}};
  m.nodes.push_back({"n", OpKind::Nms, {"boxes", "scores"}, "dets", {}});
  m.outputs = {"dets"};
  EXPECT_EQ(infer_shapes(m).at("dets"), (Shape{64, 5}));
}

TEST(InferShapes, NmsScoreCountMismatch) {
  GraphModel m;
  m.name = "nms";
  m.inputs = {{"boxes", {3, 4}}, {"scores", {2}}};
  m.nodes.push_back({"n", OpKind::Nms, {"boxes", "scores"}, "dets", {}});
  m.outputs = {"dets"};
  EXPECT_THROW(infer_shapes(m), ShapeError);
}

TEST(Builders, DeterministicPerSeed) {
  for (auto build : {build_synthetic_classifier, build_synthetic_segmenter,
                     build_synthetic_detector}) {
    GraphModel a = build(5), b = build(5), c = build(6);
    ASSERT_EQ(a.initializers.size(), b.initializers.size());
    for (const auto& [name, t] : a.initializers) {
      EXPECT_EQ(t.f32(), b.initializers.at(name).f32()) << name;
    }
    bool any_diff = false;
    for (const auto& [name, t] : a.initializers) {
      if (t.f32() != c.initializers.at(name).f32()) any_diff = true;
    }
    EXPECT_TRUE(any_diff);
  }
}

TEST(Builders, AllValidateAndInferShapes) {
  GraphModel cls = build_synthetic_classifier(5);
  GraphModel seg = build_synthetic_segmenter(5);
  GraphModel det = build_synthetic_detector(5);
  for (const auto* m : {&cls, &seg, &det}) {
    EXPECT_NO_THROW(validate_model(*m)) << m->name;
    EXPECT_NO_THROW(infer_shapes(*m)) << m->name;
  }
  EXPECT_EQ(infer_shapes(cls).at("probs"), (Shape{1, 10}));
  EXPECT_EQ(infer_shapes(seg).at("mask"), (Shape{1, 1, 64, 64}));
  EXPECT_EQ(infer_shapes(det).at("dets"), (Shape{64, 5}));
}

// The three builtins jointly exercise the whole closed op set, so fixture
// suites built on them cover every kernel.
TEST(Builders, CoverEveryOpKind) {
  std::set<OpKind> seen;
  for (auto build : {build_synthetic_classifier, build_synthetic_segmenter,
                     build_synthetic_detector}) {
    for (const auto& n : build(5).nodes) seen.insert(n.op);
  }
  EXPECT_EQ(seen.size(), all_op_kinds().size());
}

TEST(Builders, UnknownBuiltinRejected) {
  EXPECT_THROW(build_builtin("resnet", 5), InvalidConfigError);
}

TEST(Builders, DetectorPriorsWellFormed) {
  GraphModel det = build_synthetic_detector(5);
  const auto& b = det.initializers.at("lb.b").f32();
  for (int i = 0; i < 64; ++i) {
    EXPECT_LT(b[4 * i], b[4 * i + 2]);      // x1 < x2
    EXPECT_LT(b[4 * i + 1], b[4 * i + 3]);  // y1 < y2
    EXPECT_GE(b[4 * i], 0.0f);
    EXPECT_LE(b[4 * i + 3], 100.0f);
  }
}
