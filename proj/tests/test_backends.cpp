#include "driftcheck/backend.hpp"
#include "driftcheck/builders.hpp"
#include "driftcheck/half.hpp"
#include "driftcheck/prng.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace driftcheck;

namespace {

std::map<std::string, Tensor> classifier_input(std::uint64_t seed) {
  auto rng = make_stream(seed, "input:0");
  Tensor x = Tensor::zeros(DType::F32, {1, 3, 32, 32});
  for (auto& v : x.f32()) v = rng.next_symmetric(1.0f);
  return {{"input", std::move(x)}};
}

std::map<std::string, Tensor> detector_input(std::uint64_t seed) {
  auto rng = make_stream(seed, "input:0");
  Tensor x = Tensor::zeros(DType::F32, {1, 3, 64, 64});
  for (auto& v : x.f32()) v = rng.next_symmetric(1.0f);
  return {{"input", std::move(x)}};
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && a.f32() == b.f32();
}

}  // namespace

TEST(Execute, DeterministicBitwise) {
  auto model = build_synthetic_classifier(5);
  auto inputs = classifier_input(5);
  auto a = execute(model, inputs, make_reference_spec());
  auto b = execute(model, inputs, make_reference_spec());
  ASSERT_EQ(a.outputs.size(), 1u);
  EXPECT_TRUE(bitwise_equal(a.outputs.at("probs"), b.outputs.at("probs")));
}

TEST(Execute, MissingInputThrows) {
  auto model = build_synthetic_classifier(5);
  EXPECT_THROW(execute(model, {}, make_reference_spec()), GraphError);
}

TEST(Execute, WrongInputShapeThrows) {
  auto model = build_synthetic_classifier(5);
  std::map<std::string, Tensor> inputs;
  inputs.emplace("input", Tensor::zeros(DType::F32, {1, 3, 16, 16}));
  EXPECT_THROW(execute(model, inputs, make_reference_spec()), ShapeError);
}

TEST(Execute, RepeatsControlLatencyCount) {
  auto model = build_synthetic_classifier(5);
  auto inputs = classifier_input(5);
  auto t = execute(model, inputs, make_reference_spec(), false, 4);
  EXPECT_EQ(t.latencies_ms.size(), 4u);
  for (double ms : t.latencies_ms) EXPECT_GE(ms, 0.0);
  EXPECT_THROW(execute(model, inputs, make_reference_spec(), false, 0),
               InvalidConfigError);
}

TEST(Execute, CaptureCoversEveryNode) {
  auto model = build_synthetic_classifier(5);
  auto inputs = classifier_input(5);
  auto t = execute(model, inputs, make_reference_spec(), true);
  ASSERT_TRUE(t.activations.has_value());
  EXPECT_EQ(t.activations->size(), model.nodes.size());
  for (const auto& n : model.nodes) {
    EXPECT_TRUE(t.activations->count(n.id)) << n.id;
  }
  auto plain = execute(model, inputs, make_reference_spec());
  EXPECT_FALSE(plain.activations.has_value());
}

// An optimized backend with every drift source disabled matches the
// reference bit for bit.
TEST(Execute, OptimizedWithoutDriftSourcesMatchesReference) {
  for (const char* which : {"classifier", "segmenter", "detector"}) {
    auto model = build_builtin(which, 5);
    auto inputs = model.name == "classifier" ? classifier_input(5)
                                             : detector_input(5);
    auto ref = execute(model, inputs, make_reference_spec());
    auto opt = execute(
        model, inputs,
        make_optimized_spec(Precision::Full, ReductionOrder::Sequential,
                            false, NmsOrder::Stable));
    for (const auto& [name, t] : ref.outputs) {
      EXPECT_TRUE(bitwise_equal(t, opt.outputs.at(name))) << which << "/" << name;
    }
  }
}

TEST(Execute, ReferenceSpecIgnoresDriftKnobs) {
  auto model = build_synthetic_classifier(5);
  auto inputs = classifier_input(5);
  BackendSpec rogue;  // reference kind, but someone set drift knobs
  rogue.precision = Precision::Reduced;
  rogue.reduction_order = ReductionOrder::Pairwise;
  rogue.fuse_conv_relu = true;
  rogue.nms_order = NmsOrder::Unstable;
  rogue.mitigations.eager_fallback_ops.insert(OpKind::Conv2d);
  auto a = execute(model, inputs, make_reference_spec());
  auto b = execute(model, inputs, rogue);
  EXPECT_TRUE(bitwise_equal(a.outputs.at("probs"), b.outputs.at("probs")));
  EXPECT_EQ(b.half_rounding_count, 0);
  EXPECT_TRUE(b.fallback_events.empty());
}

TEST(Execute, PairwiseReductionDrifts) {
  auto model = build_synthetic_classifier(5);
  auto inputs = classifier_input(5);
  auto ref = execute(model, inputs, make_reference_spec());
  auto opt = execute(model, inputs,
                     make_optimized_spec(Precision::Full,
                                         ReductionOrder::Pairwise, false,
                                         NmsOrder::Stable));
  const auto& a = ref.outputs.at("probs").f32();
  const auto& b = opt.outputs.at("probs").f32();
  double max_diff = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    max_diff = std::max(max_diff, std::abs(double(a[i]) - double(b[i])));
  EXPECT_GT(max_diff, 0.0);
  EXPECT_LT(max_diff, 1e-3);
}

TEST(Execute, ReducedPrecisionRoundsEveryNodeOutput) {
  auto model = build_synthetic_classifier(5);
  auto inputs = classifier_input(5);
  auto t = execute(model, inputs,
                   make_optimized_spec(Precision::Reduced,
                                       ReductionOrder::Sequential, false,
                                       NmsOrder::Stable),
                   true);
  EXPECT_EQ(t.half_rounding_count, std::int64_t(model.nodes.size()));
  ASSERT_TRUE(t.activations.has_value());
  for (const auto& [id, act] : *t.activations) {
    for (float v : act.f32()) {
      EXPECT_EQ(v, round_to_half(v)) << id;
    }
  }
  auto ref = execute(model, inputs, make_reference_spec());
  EXPECT_FALSE(
      bitwise_equal(ref.outputs.at("probs"), t.outputs.at("probs")));
}

// Fusing Conv2d with its sole Relu consumer removes the intermediate
// rounding: the classifier has 9 nodes and 2 fusable pairs, so 9 roundings
// unfused and 7 fused.
TEST(Execute, FusionSkipsIntermediateRounding) {
  auto model = build_synthetic_classifier(5);
  auto inputs = classifier_input(5);
  auto unfused = execute(model, inputs,
                         make_optimized_spec(Precision::Reduced,
                                             ReductionOrder::Sequential,
                                             false, NmsOrder::Stable));
  auto fused = execute(model, inputs,
                       make_optimized_spec(Precision::Reduced,
                                           ReductionOrder::Sequential, true,
                                           NmsOrder::Stable));
  EXPECT_EQ(unfused.half_rounding_count, 9);
  EXPECT_EQ(fused.half_rounding_count, 7);
}

TEST(Execute, FusionAloneIsBitexactAtFullPrecision) {
  auto model = build_synthetic_classifier(5);
  auto inputs = classifier_input(5);
  auto ref = execute(model, inputs, make_reference_spec());
  auto fused = execute(model, inputs,
                       make_optimized_spec(Precision::Full,
                                           ReductionOrder::Sequential, true,
                                           NmsOrder::Stable));
  EXPECT_TRUE(
      bitwise_equal(ref.outputs.at("probs"), fused.outputs.at("probs")));
}

TEST(Execute, ForceFullPrecisionSuppressesRounding) {
  auto model = build_synthetic_classifier(5);
  auto inputs = classifier_input(5);
  MitigationSet m;
  m.force_full_precision = true;
  auto t = execute(model, inputs,
                   make_optimized_spec(Precision::Reduced,
                                       ReductionOrder::Sequential, false,
                                       NmsOrder::Stable, m));
  EXPECT_EQ(t.half_rounding_count, 0);
  auto ref = execute(model, inputs, make_reference_spec());
  EXPECT_TRUE(bitwise_equal(ref.outputs.at("probs"), t.outputs.at("probs")));
}

TEST(Execute, EagerFallbackRunsNodeLikeReference) {
  auto model = build_synthetic_classifier(5);
  auto inputs = classifier_input(5);
  MitigationSet m;
  m.eager_fallback_ops.insert(OpKind::Conv2d);
  auto opt = execute(model, inputs,
                     make_optimized_spec(Precision::Reduced,
                                         ReductionOrder::Pairwise, true,
                                         NmsOrder::Unstable, m),
                     true);
  auto ref = execute(model, inputs, make_reference_spec(), true);

  ASSERT_EQ(opt.fallback_events.size(), 2u);
  EXPECT_EQ(opt.fallback_events[0].node_id, "c1");
  EXPECT_EQ(opt.fallback_events[0].op, OpKind::Conv2d);
  EXPECT_EQ(opt.fallback_events[1].node_id, "c2");

  // c1 sees the raw graph input, so its fallback output is bitwise the
  // reference activation. Later nodes diverge through rounded inputs.
  EXPECT_TRUE(
      bitwise_equal(ref.activations->at("c1"), opt.activations->at("c1")));
  // Fallback outputs are never rounded: 9 nodes minus 2 fallbacks.
  EXPECT_EQ(opt.half_rounding_count, 7);
}

TEST(Execute, FallbackBreaksFusion) {
  auto model = build_synthetic_classifier(5);
  auto inputs = classifier_input(5);
  MitigationSet m;
  m.eager_fallback_ops.insert(OpKind::Relu);
  auto t = execute(model, inputs,
                   make_optimized_spec(Precision::Reduced,
                                       ReductionOrder::Sequential, true,
                                       NmsOrder::Stable, m));
  // Relu falls back (2 events); convs are no longer fused so their outputs
  // round again: 9 nodes, 2 fallback Relus unrounded, 7 roundings.
  EXPECT_EQ(t.fallback_events.size(), 2u);
  EXPECT_EQ(t.half_rounding_count, 7);
}

TEST(Execute, DetectorRunsAndNmsKeepsGrid) {
  auto model = build_synthetic_detector(5);
  auto inputs = detector_input(5);
  auto ref = execute(model, inputs, make_reference_spec());
  const auto& dets = ref.outputs.at("dets");
  // Grid priors are pairwise disjoint, so nothing is suppressed.
  ASSERT_EQ(dets.shape(), (Shape{64, 5}));
  const auto& v = dets.f32();
  for (std::size_t r = 0; r < 64; ++r) {
    EXPECT_LT(v[r * 5 + 0], v[r * 5 + 2]);
    EXPECT_LT(v[r * 5 + 1], v[r * 5 + 3]);
  }
  // Rows arrive in descending score order.
  for (std::size_t r = 1; r < 64; ++r) {
    EXPECT_GE(v[(r - 1) * 5 + 4], v[r * 5 + 4]);
  }
}

TEST(Latency, MedianLowerOfTwo) {
  EXPECT_EQ(median_latency_ms({3}), 3);
  EXPECT_EQ(median_latency_ms({1, 9, 3}), 3);
  EXPECT_EQ(median_latency_ms({1, 2, 3, 4}), 2);
  EXPECT_THROW(median_latency_ms({}), EmptyReductionError);
}

TEST(Latency, WarmupDropsFirstRepeat) {
  EXPECT_EQ(median_latency_ms({100, 1, 2, 3}, true), 2);
  // A single sample survives even with drop_first.
  EXPECT_EQ(median_latency_ms({7}, true), 7);
}
