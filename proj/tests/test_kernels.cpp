#include "driftcheck/kernels.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace driftcheck;

namespace {
constexpr auto kSeq = ReductionOrder::Sequential;
}

TEST(Kernels, ReluClampsNegatives) {
  Tensor x = Tensor::from_f32({3}, {-1.0f, 0.0f, 2.0f});
  EXPECT_EQ(run_relu(x).f32(), (std::vector<float>{0.0f, 0.0f, 2.0f}));
}

TEST(Kernels, ConvIdentityKernel) {
  Tensor x = Tensor::from_f32({1, 1, 2, 2}, {1, 2, 3, 4});
  Tensor w = Tensor::from_f32({1, 1, 1, 1}, {1.0f});
  Tensor y = run_conv2d(x, w, nullptr, 1, 0, kSeq);
  EXPECT_EQ(y.shape(), x.shape());
  EXPECT_EQ(y.f32(), x.f32());
}

// All-ones 3x3 kernel with pad 1 on an all-ones 3x3 image counts the
// in-bounds neighbors: 4 at corners, 6 at edges, 9 in the center. Padding
// contributes no terms.
TEST(Kernels, ConvZeroPaddingAddsNoTerms) {
  Tensor x = Tensor::zeros(DType::F32, {1, 1, 3, 3});
  for (auto& v : x.f32()) v = 1.0f;
  Tensor w = Tensor::zeros(DType::F32, {1, 1, 3, 3});
  for (auto& v : w.f32()) v = 1.0f;
  Tensor y = run_conv2d(x, w, nullptr, 1, 1, kSeq);
  EXPECT_EQ(y.f32(), (std::vector<float>{4, 6, 4, 6, 9, 6, 4, 6, 4}));
}

TEST(Kernels, ConvBiasSingleAdd) {
  Tensor x = Tensor::from_f32({1, 1, 1, 1}, {2.0f});
  Tensor w = Tensor::from_f32({2, 1, 1, 1}, {3.0f, -1.0f});
  Tensor b = Tensor::from_f32({2}, {0.5f, 0.25f});
  Tensor y = run_conv2d(x, w, &b, 1, 0, kSeq);
  EXPECT_EQ(y.f32(), (std::vector<float>{6.5f, -1.75f}));
}

TEST(Kernels, ConvStride) {
  Tensor x = Tensor::from_f32({1, 1, 1, 4}, {1, 2, 3, 4});
  Tensor w = Tensor::from_f32({1, 1, 1, 2}, {1.0f, 1.0f});
  Tensor y = run_conv2d(x, w, nullptr, 2, 0, kSeq);
  EXPECT_EQ(y.shape(), (Shape{1, 1, 1, 2}));
  EXPECT_EQ(y.f32(), (std::vector<float>{3, 7}));
}

TEST(Kernels, LinearKnownValues) {
  Tensor x = Tensor::from_f32({1, 3}, {1, 2, 3});
  Tensor w = Tensor::from_f32({2, 3}, {1, 0, 0, 0, 1, 1});
  Tensor b = Tensor::from_f32({2}, {10, 20});
  Tensor y = run_linear(x, w, &b, kSeq);
  EXPECT_EQ(y.f32(), (std::vector<float>{11, 25}));
}

TEST(Kernels, AddElementwise) {
  Tensor a = Tensor::from_f32({2}, {1, 2});
  Tensor b = Tensor::from_f32({2}, {0.5f, -2});
  EXPECT_EQ(run_add(a, b).f32(), (std::vector<float>{1.5f, 0}));
  Tensor c = Tensor::from_f32({3}, {0, 0, 0});
  EXPECT_THROW(run_add(a, c), ShapeError);
}

TEST(Kernels, ConcatAxis1) {
  Tensor a = Tensor::from_f32({1, 2, 1, 2}, {1, 2, 3, 4});
  Tensor b = Tensor::from_f32({1, 1, 1, 2}, {9, 8});
  Tensor y = run_concat({&a, &b}, 1);
  EXPECT_EQ(y.shape(), (Shape{1, 3, 1, 2}));
  EXPECT_EQ(y.f32(), (std::vector<float>{1, 2, 3, 4, 9, 8}));
}

TEST(Kernels, MaxPoolTwoByTwo) {
  Tensor x = Tensor::from_f32({1, 1, 2, 4}, {1, 3, 2, 0, 5, 2, 8, 1});
  Tensor y = run_maxpool2d(x, 2, 2);
  EXPECT_EQ(y.shape(), (Shape{1, 1, 1, 2}));
  EXPECT_EQ(y.f32(), (std::vector<float>{5, 8}));
}

TEST(Kernels, GlobalAvgPoolMeans) {
  Tensor x = Tensor::from_f32({1, 2, 2, 2}, {1, 2, 3, 4, 10, 10, 10, 10});
  Tensor y = run_global_avg_pool(x, kSeq);
  EXPECT_EQ(y.shape(), (Shape{1, 2, 1, 1}));
  EXPECT_EQ(y.f32(), (std::vector<float>{2.5f, 10.0f}));
}

TEST(Kernels, BatchNormAffinePerChannel) {
  Tensor x = Tensor::from_f32({1, 2, 1, 2}, {1, 2, 3, 4});
  Tensor scale = Tensor::from_f32({2}, {2.0f, -1.0f});
  Tensor shift = Tensor::from_f32({2}, {0.0f, 100.0f});
  Tensor y = run_batchnorm_affine(x, scale, shift);
  EXPECT_EQ(y.f32(), (std::vector<float>{2, 4, 97, 96}));
}

TEST(Kernels, BatchNormAffineRank2) {
  Tensor x = Tensor::from_f32({1, 3}, {1, 2, 3});
  Tensor scale = Tensor::from_f32({3}, {1, 2, 3});
  Tensor shift = Tensor::from_f32({3}, {0, 0, 1});
  EXPECT_EQ(run_batchnorm_affine(x, scale, shift).f32(),
            (std::vector<float>{1, 4, 10}));
}

TEST(Kernels, SoftmaxUniformLogits) {
  Tensor x = Tensor::from_f32({1, 4}, {3, 3, 3, 3});
  Tensor y = run_softmax(x, 1, kSeq);
  for (float v : y.f32()) EXPECT_FLOAT_EQ(v, 0.25f);
}

TEST(Kernels, SoftmaxMaxSubtractedStable) {
  Tensor x = Tensor::from_f32({1, 2}, {1000.0f, 999.0f});
  Tensor y = run_softmax(x, 1, kSeq);
  for (float v : y.f32()) EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(y.f32()[0] + y.f32()[1], 1.0f, 1e-6f);
  EXPECT_GT(y.f32()[0], y.f32()[1]);
}

TEST(Kernels, SoftmaxRowsSumToOne) {
  Tensor x = Tensor::from_f32({2, 3}, {0.1f, -2, 3, 5, 5, 5});
  Tensor y = run_softmax(x, 1, kSeq);
  EXPECT_NEAR(y.f32()[0] + y.f32()[1] + y.f32()[2], 1.0f, 1e-6f);
  EXPECT_NEAR(y.f32()[3] + y.f32()[4] + y.f32()[5], 1.0f, 1e-6f);
}

TEST(Kernels, FlattenKeepsBatch) {
  Tensor x = Tensor::zeros(DType::F32, {2, 3, 2, 2});
  EXPECT_EQ(run_flatten(x).shape(), (Shape{2, 12}));
}

TEST(Kernels, ArgmaxChannelLowestTieWins) {
  // Two channels, both zero everywhere: label must be 0.
  Tensor x = Tensor::zeros(DType::F32, {1, 2, 2, 2});
  Tensor y = run_argmax_channel(x);
  EXPECT_EQ(y.shape(), (Shape{1, 1, 2, 2}));
  for (float v : y.f32()) EXPECT_EQ(v, 0.0f);
  // Channel 1 wins only where strictly greater.
  x.f32()[4] = 1.0f;  // channel 1, pixel 0
  y = run_argmax_channel(x);
  EXPECT_EQ(y.f32(), (std::vector<float>{1, 0, 0, 0}));
}
