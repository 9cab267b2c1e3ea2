#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "driftcheck/errors.hpp"
#include "driftcheck/tensor.hpp"

namespace driftcheck {

// Channel axis convention: rank-4 is (n, c, h, w), rank-3 is (c, h, w).
inline std::size_t channel_axis(const Tensor& x) {
  if (x.rank() == 4) return 1;
  if (x.rank() == 3) return 0;
  throw ShapeError("normalize expects rank 3 or 4, got rank " +
                   std::to_string(x.rank()));
}

inline Tensor normalize(const Tensor& x, const std::vector<double>& means,
                        const std::vector<double>& stds) {
  if (means.size() != stds.size()) {
    throw ShapeError("means/stds length mismatch");
  }
  for (double s : stds) {
    if (s == 0.0) throw InvalidConfigError("zero std in normalization");
  }
  const std::size_t axis = channel_axis(x);
  const auto& shape = x.shape();
  const auto channels = static_cast<std::size_t>(shape[axis]);
  if (channels != means.size()) {
    throw ShapeError("channel count " + std::to_string(channels) +
                     " does not match " + std::to_string(means.size()) +
                     " normalization entries");
  }

  std::int64_t inner = 1;  // elements per channel slice
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
  std::int64_t outer = 1;  // slices before the channel axis
  for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];

  Tensor out = Tensor::zeros(x.dtype(), shape);
  for (std::int64_t o = 0; o < outer; ++o) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::int64_t base =
          (o * static_cast<std::int64_t>(channels) +
           static_cast<std::int64_t>(c)) *
          inner;
      const double mean = means[c];
      const double inv = 1.0 / stds[c];
      for (std::int64_t i = 0; i < inner; ++i) {
        const double v = (x.at_flat(base + i) - mean) * inv;
        if (x.dtype() == DType::F32) {
          out.f32()[static_cast<std::size_t>(base + i)] =
              static_cast<float>(v);
        } else {
          out.f64()[static_cast<std::size_t>(base + i)] = v;
        }
      }
    }
  }
  return out;
}

// Half-pixel-center bilinear interpolation: the source coordinate for output
// index d is (d + 0.5) * in/out - 0.5, clamped into the valid range.
template <typename T>
void bilinear_resize_plane(const T* src, std::int64_t in_h, std::int64_t in_w,
                           T* dst, std::int64_t out_h, std::int64_t out_w) {
  const double scale_y = static_cast<double>(in_h) / static_cast<double>(out_h);
  const double scale_x = static_cast<double>(in_w) / static_cast<double>(out_w);
  for (std::int64_t oy = 0; oy < out_h; ++oy) {
    double sy = (static_cast<double>(oy) + 0.5) * scale_y - 0.5;
    sy = std::clamp(sy, 0.0, static_cast<double>(in_h - 1));
    const auto y0 = static_cast<std::int64_t>(std::floor(sy));
    const std::int64_t y1 = std::min(y0 + 1, in_h - 1);
    const double wy = sy - static_cast<double>(y0);
    for (std::int64_t ox = 0; ox < out_w; ++ox) {
      double sx = (static_cast<double>(ox) + 0.5) * scale_x - 0.5;
      sx = std::clamp(sx, 0.0, static_cast<double>(in_w - 1));
      const auto x0 = static_cast<std::int64_t>(std::floor(sx));
      const std::int64_t x1 = std::min(x0 + 1, in_w - 1);
      const double wx = sx - static_cast<double>(x0);

      const double v00 = src[y0 * in_w + x0];
      const double v01 = src[y0 * in_w + x1];
      const double v10 = src[y1 * in_w + x0];
      const double v11 = src[y1 * in_w + x1];
      const double top = v00 * (1.0 - wx) + v01 * wx;
      const double bot = v10 * (1.0 - wx) + v11 * wx;
      dst[oy * out_w + ox] = static_cast<T>(top * (1.0 - wy) + bot * wy);
    }
  }
}

inline Tensor bilinear_resize(const Tensor& x, std::int64_t out_h,
                              std::int64_t out_w) {
  if (x.rank() != 4) {
    throw ShapeError("bilinear_resize expects rank 4, got rank " +
                     std::to_string(x.rank()));
  }
  if (out_h < 1 || out_w < 1) throw ShapeError("resize extents must be >= 1");
  const auto& s = x.shape();
  const std::int64_t n = s[0], c = s[1], in_h = s[2], in_w = s[3];
  Tensor out = Tensor::zeros(x.dtype(), {n, c, out_h, out_w});
  const std::int64_t in_plane = in_h * in_w;
  const std::int64_t out_plane = out_h * out_w;
  for (std::int64_t p = 0; p < n * c; ++p) {
    if (x.dtype() == DType::F32) {
      bilinear_resize_plane(x.f32().data() + p * in_plane, in_h, in_w,
                            out.f32().data() + p * out_plane, out_h, out_w);
    } else {
      bilinear_resize_plane(x.f64().data() + p * in_plane, in_h, in_w,
                            out.f64().data() + p * out_plane, out_h, out_w);
    }
  }
  return out;
}

// Snap spatial extents down to a multiple of m (never below m itself), the
// shape constraint strided backbones expect.
inline Tensor adjust_to_multiple(const Tensor& x, std::int64_t m) {
  if (x.rank() != 4) {
    throw ShapeError("adjust_to_multiple expects rank 4, got rank " +
                     std::to_string(x.rank()));
  }
  if (m < 1) throw InvalidConfigError("resize multiple must be >= 1");
  const std::int64_t h = x.shape()[2];
  const std::int64_t w = x.shape()[3];
  const std::int64_t nh = std::max(m, (h / m) * m);
  const std::int64_t nw = std::max(m, (w / m) * m);
  if (nh == h && nw == w) return x;
  return bilinear_resize(x, nh, nw);
}

}  // namespace driftcheck
