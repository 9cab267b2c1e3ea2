#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "driftcheck/errors.hpp"
#include "driftcheck/graph.hpp"
#include "driftcheck/image.hpp"
#include "driftcheck/nms.hpp"
#include "driftcheck/reductions.hpp"
#include "driftcheck/tensor.hpp"

namespace driftcheck {

// f32 kernels. Every multi-term accumulation goes through reduce_sum so the
// reduction order is the single knob that separates the backends; products
// and single adds round identically everywhere.

inline Tensor run_conv2d(const Tensor& x, const Tensor& w, const Tensor* bias,
                         std::int64_t stride, std::int64_t pad,
                         ReductionOrder order) {
  const auto& xs = x.shape();
  const auto& ws = w.shape();
  const std::int64_t n = xs[0], c = xs[1], h = xs[2], wd = xs[3];
  const std::int64_t oc = ws[0], kh = ws[2], kw = ws[3];
  const std::int64_t oh = (h + 2 * pad - kh) / stride + 1;
  const std::int64_t ow = (wd + 2 * pad - kw) / stride + 1;
  Tensor out = Tensor::zeros(DType::F32, {n, oc, oh, ow});
  const float* xd = x.f32().data();
  const float* wdt = w.f32().data();
  float* od = out.f32().data();
  std::vector<float> terms;
  terms.reserve(static_cast<std::size_t>(c * kh * kw));
  for (std::int64_t in = 0; in < n; ++in) {
    for (std::int64_t o = 0; o < oc; ++o) {
      for (std::int64_t oy = 0; oy < oh; ++oy) {
        for (std::int64_t ox = 0; ox < ow; ++ox) {
          terms.clear();
          // Zero padding contributes no terms: a product with an
          // out-of-bounds pixel is exactly zero and is omitted rather than
          // accumulated, so the term count varies near the border.
          for (std::int64_t ic = 0; ic < c; ++ic) {
            for (std::int64_t ky = 0; ky < kh; ++ky) {
              const std::int64_t iy = oy * stride - pad + ky;
              if (iy < 0 || iy >= h) continue;
              for (std::int64_t kx = 0; kx < kw; ++kx) {
                const std::int64_t ix = ox * stride - pad + kx;
                if (ix < 0 || ix >= wd) continue;
                const float xv = xd[((in * c + ic) * h + iy) * wd + ix];
                const float wv = wdt[((o * c + ic) * kh + ky) * kw + kx];
                terms.push_back(xv * wv);
              }
            }
          }
          float acc = terms.empty() ? 0.0f
                                    : reduce_sum(terms.data(), terms.size(),
                                                 order);
          if (bias) acc += bias->f32()[static_cast<std::size_t>(o)];
          od[((in * oc + o) * oh + oy) * ow + ox] = acc;
        }
      }
    }
  }
  return out;
}

inline Tensor run_linear(const Tensor& x, const Tensor& w, const Tensor* bias,
                         ReductionOrder order) {
  const std::int64_t n = x.shape()[0], in_f = x.shape()[1];
  const std::int64_t out_f = w.shape()[0];
  Tensor out = Tensor::zeros(DType::F32, {n, out_f});
  const float* xd = x.f32().data();
  const float* wd = w.f32().data();
  float* od = out.f32().data();
  std::vector<float> terms(static_cast<std::size_t>(in_f));
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t o = 0; o < out_f; ++o) {
      for (std::int64_t k = 0; k < in_f; ++k) {
        terms[static_cast<std::size_t>(k)] =
            xd[i * in_f + k] * wd[o * in_f + k];
      }
      float acc = reduce_sum(terms.data(), terms.size(), order);
      if (bias) acc += bias->f32()[static_cast<std::size_t>(o)];
      od[i * out_f + o] = acc;
    }
  }
  return out;
}

inline Tensor run_relu(const Tensor& x) {
  Tensor out = x;
  for (auto& v : out.f32()) v = std::max(0.0f, v);
  return out;
}

inline Tensor run_add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("add operand shapes differ");
  Tensor out = a;
  const auto& bd = b.f32();
  auto& od = out.f32();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] += bd[i];
  return out;
}

inline Tensor run_concat(const std::vector<const Tensor*>& xs,
                         std::int64_t axis) {
  const Shape& first = xs[0]->shape();
  Shape out_shape = first;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    out_shape[static_cast<std::size_t>(axis)] +=
        xs[i]->shape()[static_cast<std::size_t>(axis)];
  }
  Tensor out = Tensor::zeros(DType::F32, out_shape);
  std::int64_t outer = 1;
  for (std::int64_t d = 0; d < axis; ++d) outer *= first[static_cast<std::size_t>(d)];
  std::int64_t inner = 1;
  for (std::size_t d = static_cast<std::size_t>(axis) + 1; d < first.size(); ++d) {
    inner *= first[d];
  }
  float* od = out.f32().data();
  const std::int64_t out_axis = out_shape[static_cast<std::size_t>(axis)];
  std::int64_t axis_offset = 0;
  for (const Tensor* x : xs) {
    const std::int64_t ax = x->shape()[static_cast<std::size_t>(axis)];
    const float* xd = x->f32().data();
    for (std::int64_t ou = 0; ou < outer; ++ou) {
      std::copy_n(xd + ou * ax * inner, ax * inner,
                  od + (ou * out_axis + axis_offset) * inner);
    }
    axis_offset += ax;
  }
  return out;
}

inline Tensor run_maxpool2d(const Tensor& x, std::int64_t k,
                            std::int64_t stride) {
  const auto& xs = x.shape();
  const std::int64_t n = xs[0], c = xs[1], h = xs[2], w = xs[3];
  const std::int64_t oh = (h - k) / stride + 1;
  const std::int64_t ow = (w - k) / stride + 1;
  Tensor out = Tensor::zeros(DType::F32, {n, c, oh, ow});
  const float* xd = x.f32().data();
  float* od = out.f32().data();
  for (std::int64_t p = 0; p < n * c; ++p) {
    for (std::int64_t oy = 0; oy < oh; ++oy) {
      for (std::int64_t ox = 0; ox < ow; ++ox) {
        float best = xd[(p * h + oy * stride) * w + ox * stride];
        for (std::int64_t ky = 0; ky < k; ++ky) {
          for (std::int64_t kx = 0; kx < k; ++kx) {
            best = std::max(best,
                            xd[(p * h + oy * stride + ky) * w + ox * stride + kx]);
          }
        }
        od[(p * oh + oy) * ow + ox] = best;
      }
    }
  }
  return out;
}

inline Tensor run_global_avg_pool(const Tensor& x, ReductionOrder order) {
  const auto& xs = x.shape();
  const std::int64_t n = xs[0], c = xs[1], plane = xs[2] * xs[3];
  Tensor out = Tensor::zeros(DType::F32, {n, c, 1, 1});
  const float* xd = x.f32().data();
  float* od = out.f32().data();
  for (std::int64_t p = 0; p < n * c; ++p) {
    const float sum = reduce_sum(xd + p * plane,
                                 static_cast<std::size_t>(plane), order);
    od[p] = sum / static_cast<float>(plane);
  }
  return out;
}

inline Tensor run_batchnorm_affine(const Tensor& x, const Tensor& scale,
                                   const Tensor& shift) {
  const auto& xs = x.shape();
  const std::int64_t c = xs[1];
  std::int64_t inner = 1;
  for (std::size_t d = 2; d < xs.size(); ++d) inner *= xs[d];
  Tensor out = x;
  float* od = out.f32().data();
  const float* sc = scale.f32().data();
  const float* sh = shift.f32().data();
  const std::int64_t n = xs[0];
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const float s = sc[ch], b = sh[ch];
      float* row = od + (i * c + ch) * inner;
      for (std::int64_t j = 0; j < inner; ++j) row[j] = row[j] * s + b;
    }
  }
  return out;
}

inline Tensor run_softmax(const Tensor& x, std::int64_t axis,
                          ReductionOrder order) {
  const auto& xs = x.shape();
  const std::int64_t ax = xs[static_cast<std::size_t>(axis)];
  std::int64_t inner = 1;
  for (std::size_t d = static_cast<std::size_t>(axis) + 1; d < xs.size(); ++d) {
    inner *= xs[d];
  }
  std::int64_t outer = 1;
  for (std::int64_t d = 0; d < axis; ++d) outer *= xs[static_cast<std::size_t>(d)];
  Tensor out = x;
  float* od = out.f32().data();
  std::vector<float> lane(static_cast<std::size_t>(ax));
  for (std::int64_t o = 0; o < outer; ++o) {
    for (std::int64_t in = 0; in < inner; ++in) {
      float* base = od + o * ax * inner + in;
      float mx = base[0];
      for (std::int64_t a = 1; a < ax; ++a) mx = std::max(mx, base[a * inner]);
      for (std::int64_t a = 0; a < ax; ++a) {
        lane[static_cast<std::size_t>(a)] = std::exp(base[a * inner] - mx);
      }
      const float denom = reduce_sum(lane.data(), lane.size(), order);
      for (std::int64_t a = 0; a < ax; ++a) {
        base[a * inner] = lane[static_cast<std::size_t>(a)] / denom;
      }
    }
  }
  return out;
}

inline Tensor run_flatten(const Tensor& x) {
  std::int64_t rest = 1;
  for (std::size_t d = 1; d < x.rank(); ++d) rest *= x.shape()[d];
  return Tensor::from_f32({x.shape()[0], rest}, x.f32());
}

// Ties go to the lowest channel index; labels are stored as f32 values.
inline Tensor run_argmax_channel(const Tensor& x) {
  const auto& xs = x.shape();
  const std::int64_t n = xs[0], c = xs[1], plane = xs[2] * xs[3];
  Tensor out = Tensor::zeros(DType::F32, {n, 1, xs[2], xs[3]});
  const float* xd = x.f32().data();
  float* od = out.f32().data();
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t p = 0; p < plane; ++p) {
      std::int64_t best = 0;
      float bestv = xd[i * c * plane + p];
      for (std::int64_t ch = 1; ch < c; ++ch) {
        const float v = xd[(i * c + ch) * plane + p];
        if (v > bestv) {
          bestv = v;
          best = ch;
        }
      }
      od[i * plane + p] = static_cast<float>(best);
    }
  }
  return out;
}

// Packed detections: one row [x1, y1, x2, y2, score] per kept box, in visit
// (score-descending) order. apply_sort permutes candidates into the
// canonical order first, which also makes tie order deterministic.
inline Tensor run_nms_node(const Tensor& boxes, const Tensor& scores,
                           double iou_threshold, NmsOrder policy,
                           bool apply_sort) {
  const std::int64_t nb = boxes.numel();
  if (nb % 4 != 0) throw ShapeError("boxes element count not divisible by 4");
  const auto n = static_cast<std::size_t>(nb / 4);
  if (scores.numel() != static_cast<std::int64_t>(n)) {
    throw ShapeError("one score per box required");
  }

  std::vector<float> bx(boxes.f32());
  std::vector<float> sc(scores.f32());
  if (apply_sort) {
    const auto perm = pre_nms_sort(BoxView{bx.data(), n}, sc.data());
    std::vector<float> pb(4 * n);
    std::vector<float> ps(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (int d = 0; d < 4; ++d) pb[4 * i + d] = bx[4 * perm[i] + d];
      ps[i] = sc[perm[i]];
    }
    bx.swap(pb);
    sc.swap(ps);
  }

  const auto kept =
      nms(BoxView{bx.data(), n}, sc.data(), iou_threshold, policy, apply_sort);
  Tensor out =
      Tensor::zeros(DType::F32, {static_cast<std::int64_t>(kept.size()), 5});
  float* od = out.f32().data();
  for (std::size_t r = 0; r < kept.size(); ++r) {
    const std::size_t i = kept[r];
    od[5 * r + 0] = bx[4 * i + 0];
    od[5 * r + 1] = bx[4 * i + 1];
    od[5 * r + 2] = bx[4 * i + 2];
    od[5 * r + 3] = bx[4 * i + 3];
    od[5 * r + 4] = sc[i];
  }
  return out;
}

}  // namespace driftcheck
