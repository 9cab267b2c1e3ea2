#include "driftcheck/image.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "driftcheck/prng.hpp"

using namespace driftcheck;

namespace {

Tensor chw(std::int64_t c, std::int64_t h, std::int64_t w,
           std::uint64_t seed) {
  Tensor t = Tensor::zeros(DType::F32, {c, h, w});
  SplitMix64 g(seed);
  for (auto& v : t.f32()) v = g.next_float01();
  return t;
}

}  // namespace

TEST(Normalize, CancelsMatchingMean) {
  Tensor x = Tensor::from_f32({3, 1, 1}, {0.485f, 0.456f, 0.406f});
  Tensor y = normalize(x, {0.485, 0.456, 0.406}, {0.229, 0.224, 0.225});
  for (float v : y.f32()) EXPECT_NEAR(v, 0.0f, 1e-7f);
}

TEST(Normalize, IdentityWithZeroMeanUnitStd) {
  Tensor x = chw(3, 4, 5, 2);
  Tensor y = normalize(x, {0, 0, 0}, {1, 1, 1});
  EXPECT_EQ(y.f32(), x.f32());
}

TEST(Normalize, HandValue) {
  Tensor x = Tensor::from_f32({1, 1, 1}, {1.0f});
  Tensor y = normalize(x, {0.5}, {0.25});
  EXPECT_FLOAT_EQ(y.f32()[0], 2.0f);
}

TEST(Normalize, Rank4UsesAxis1) {
  Tensor x = Tensor::from_f32({1, 2, 1, 2}, {1, 1, 10, 10});
  Tensor y = normalize(x, {1.0, 10.0}, {1.0, 1.0});
  EXPECT_EQ(y.f32(), (std::vector<float>{0, 0, 0, 0}));
}

TEST(Normalize, ZeroStdThrows) {
  Tensor x = chw(3, 2, 2, 3);
  EXPECT_THROW(normalize(x, {0, 0, 0}, {1, 0, 1}), InvalidConfigError);
}

TEST(Normalize, ChannelMismatchThrows) {
  Tensor x = chw(3, 2, 2, 3);
  EXPECT_THROW(normalize(x, {0, 0}, {1, 1}), ShapeError);
}

TEST(Normalize, UnsupportedRankThrows) {
  Tensor x = Tensor::zeros(DType::F32, {3, 3});
  EXPECT_THROW(normalize(x, {0, 0, 0}, {1, 1, 1}), ShapeError);
}

TEST(BilinearResize, SameSizeIsIdentity) {
  Tensor x = Tensor::zeros(DType::F32, {1, 2, 5, 7});
  SplitMix64 g(4);
  for (auto& v : x.f32()) v = g.next_float01();
  Tensor y = bilinear_resize(x, 5, 7);
  EXPECT_EQ(y.f32(), x.f32());
}

TEST(BilinearResize, OnePixelBroadcasts) {
  Tensor x = Tensor::from_f32({1, 1, 1, 1}, {0.75f});
  Tensor y = bilinear_resize(x, 4, 6);
  EXPECT_EQ(y.numel(), 24);
  for (float v : y.f32()) EXPECT_FLOAT_EQ(v, 0.75f);
}

// Per-pixel oracle recomputed inline for a 2x2 -> 4x4 upsample with
// half-pixel centers.
TEST(BilinearResize, MatchesScalarOracle2x2To4x4) {
  Tensor x = Tensor::from_f32({1, 1, 2, 2}, {0, 1, 2, 3});
  Tensor y = bilinear_resize(x, 4, 4);
  const float in[2][2] = {{0, 1}, {2, 3}};
  for (int oy = 0; oy < 4; ++oy) {
    for (int ox = 0; ox < 4; ++ox) {
      double sy = std::clamp((oy + 0.5) * 0.5 - 0.5, 0.0, 1.0);
      double sx = std::clamp((ox + 0.5) * 0.5 - 0.5, 0.0, 1.0);
      int y0 = static_cast<int>(std::floor(sy)), y1 = std::min(y0 + 1, 1);
      int x0 = static_cast<int>(std::floor(sx)), x1 = std::min(x0 + 1, 1);
      double wy = sy - y0, wx = sx - x0;
      double want = in[y0][x0] * (1 - wy) * (1 - wx) +
                    in[y0][x1] * (1 - wy) * wx + in[y1][x0] * wy * (1 - wx) +
                    in[y1][x1] * wy * wx;
      EXPECT_NEAR(y.f32()[oy * 4 + ox], want, 1e-6) << oy << "," << ox;
    }
  }
  // Corners replicate the nearest input under the clamping convention.
  EXPECT_FLOAT_EQ(y.f32()[0], 0.0f);
  EXPECT_FLOAT_EQ(y.f32()[3], 1.0f);
  EXPECT_FLOAT_EQ(y.f32()[12], 2.0f);
  EXPECT_FLOAT_EQ(y.f32()[15], 3.0f);
}

TEST(BilinearResize, RankGuard) {
  Tensor x = Tensor::zeros(DType::F32, {3, 4, 4});
  EXPECT_THROW(bilinear_resize(x, 2, 2), ShapeError);
}

TEST(BilinearResize, DownsampleAveragesUniformField) {
  Tensor x = Tensor::zeros(DType::F32, {1, 1, 8, 8});
  for (auto& v : x.f32()) v = 0.5f;
  Tensor y = bilinear_resize(x, 3, 3);
  for (float v : y.f32()) EXPECT_FLOAT_EQ(v, 0.5f);
}

TEST(AdjustToMultiple, AlreadyAlignedUnchanged) {
  Tensor x = Tensor::zeros(DType::F32, {1, 3, 224, 224});
  SplitMix64 g(6);
  for (auto& v : x.f32()) v = g.next_float01();
  Tensor y = adjust_to_multiple(x, 32);
  EXPECT_EQ(y.shape(), x.shape());
  EXPECT_EQ(y.f32(), x.f32());
}

TEST(AdjustToMultiple, SnapsDown) {
  Tensor x = Tensor::zeros(DType::F32, {1, 1, 230, 240});
  Tensor y = adjust_to_multiple(x, 32);
  EXPECT_EQ(y.shape(), (Shape{1, 1, 224, 224}));
}

TEST(AdjustToMultiple, NeverBelowTheMultiple) {
  Tensor x = Tensor::zeros(DType::F32, {1, 1, 20, 100});
  Tensor y = adjust_to_multiple(x, 32);
  EXPECT_EQ(y.shape(), (Shape{1, 1, 32, 96}));
}

TEST(AdjustToMultiple, RankGuard) {
  Tensor x = Tensor::zeros(DType::F32, {3, 20, 20});
  EXPECT_THROW(adjust_to_multiple(x, 32), ShapeError);
}
