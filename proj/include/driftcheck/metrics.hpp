#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "driftcheck/errors.hpp"
#include "driftcheck/nms.hpp"
#include "driftcheck/tensor.hpp"

namespace driftcheck {

// Indices of the k largest values, ties broken toward the lower index.
inline std::vector<std::size_t> topk_indices(const std::vector<float>& v,
                                             std::size_t k) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (v[a] != v[b]) return v[a] > v[b];
    return a < b;
  });
  idx.resize(k);
  return idx;
}

struct TopkResult {
  bool top1_match = false;
  double agreement = 0.0;  // |top-k set intersection| / k
};

inline TopkResult topk_agreement(const std::vector<float>& ref,
                                 const std::vector<float>& tgt,
                                 std::size_t k) {
  if (ref.size() != tgt.size()) {
    throw ShapeError("logit vectors differ in length: " +
                     std::to_string(ref.size()) + " vs " +
                     std::to_string(tgt.size()));
  }
  if (k == 0 || k > ref.size()) {
    throw InvalidConfigError("top-k k=" + std::to_string(k) +
                             " out of range for " +
                             std::to_string(ref.size()) + " logits");
  }
  const auto rk = topk_indices(ref, k);
  const auto tk = topk_indices(tgt, k);
  TopkResult r;
  r.top1_match = rk[0] == tk[0];
  const std::set<std::size_t> rs(rk.begin(), rk.end());
  std::size_t inter = 0;
  for (auto i : tk) inter += rs.count(i);
  r.agreement = double(inter) / double(k);
  return r;
}

// Mean IoU over the classes present in either mask; classes absent from
// both are excluded from the average.
inline double miou(const std::vector<int>& ref, const std::vector<int>& tgt,
                   int num_classes) {
  if (ref.size() != tgt.size()) {
    throw ShapeError("label masks differ in length");
  }
  for (const auto* m : {&ref, &tgt}) {
    for (int label : *m) {
      if (label < 0 || label >= num_classes) {
        throw InvalidConfigError("label " + std::to_string(label) +
                                 " out of range for " +
                                 std::to_string(num_classes) + " classes");
      }
    }
  }
  std::vector<std::size_t> inter(num_classes, 0), uni(num_classes, 0);
  for (std::size_t i = 0; i < ref.size(); ++i) {
    if (ref[i] == tgt[i]) {
      ++inter[ref[i]];
      ++uni[ref[i]];
    } else {
      ++uni[ref[i]];
      ++uni[tgt[i]];
    }
  }
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < num_classes; ++c) {
    if (uni[c] == 0) continue;
    sum += double(inter[c]) / double(uni[c]);
    ++present;
  }
  if (present == 0) return 1.0;  // vacuous agreement on empty masks
  return sum / present;
}

inline std::vector<int> labels_from_mask(const Tensor& mask) {
  std::vector<int> out;
  out.reserve(std::size_t(mask.numel()));
  for (std::int64_t i = 0; i < mask.numel(); ++i) {
    out.push_back(int(std::lround(mask.at_flat(i))));
  }
  return out;
}

namespace detail {

// Splits a packed (k, 5) detection tensor into boxes and scores.
struct DetRows {
  std::vector<float> boxes;  // flat (k, 4)
  std::vector<float> scores;
};

inline DetRows split_dets(const Tensor& dets) {
  if (dets.shape().size() != 2 || dets.shape()[1] != 5) {
    throw ShapeError("detections must be (k, 5), got " +
                     shape_str(dets.shape()));
  }
  const auto& v = dets.f32();
  DetRows r;
  const std::size_t k = dets.shape()[0];
  r.boxes.reserve(4 * k);
  r.scores.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    r.boxes.insert(r.boxes.end(), v.begin() + 5 * i, v.begin() + 5 * i + 4);
    r.scores.push_back(v[5 * i + 4]);
  }
  return r;
}

}  // namespace detail

// Symmetric agreement between two detection sets: greedy one-to-one
// matching in descending ref-score order, each ref box taking the
// highest-IoU unmatched tgt box at or above match_iou.
// F1 = 2*matches / (|ref| + |tgt|); empty vs empty is vacuous agreement.
inline double detection_f1(const Tensor& ref_dets, const Tensor& tgt_dets,
                           double match_iou = 0.5) {
  const auto ref = detail::split_dets(ref_dets);
  const auto tgt = detail::split_dets(tgt_dets);
  const std::size_t nr = ref.scores.size();
  const std::size_t nt = tgt.scores.size();
  if (nr + nt == 0) return 1.0;

  std::vector<std::size_t> order(nr);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (ref.scores[a] != ref.scores[b]) return ref.scores[a] > ref.scores[b];
    return a < b;
  });

  const BoxView rb{ref.boxes.data(), nr};
  const BoxView tb{tgt.boxes.data(), nt};
  std::vector<char> taken(nt, 0);
  std::size_t matches = 0;
  for (auto i : order) {
    double best = -1.0;
    std::size_t best_j = nt;
    for (std::size_t j = 0; j < nt; ++j) {
      if (taken[j]) continue;
      const double v = iou(rb.x1(i), rb.y1(i), rb.x2(i), rb.y2(i), tb.x1(j),
                           tb.y1(j), tb.x2(j), tb.y2(j));
      if (v > best) {
        best = v;
        best_j = j;
      }
    }
    if (best_j < nt && best >= match_iou) {
      taken[best_j] = 1;
      ++matches;
    }
  }
  return 2.0 * double(matches) / double(nr + nt);
}

}  // namespace driftcheck
