#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "driftcheck/errors.hpp"

namespace driftcheck {

struct BoxView {
  const float* data;  // flat (n, 4) row-major: x1, y1, x2, y2
  std::size_t n;

  float x1(std::size_t i) const { return data[4 * i]; }
  float y1(std::size_t i) const { return data[4 * i + 1]; }
  float x2(std::size_t i) const { return data[4 * i + 2]; }
  float y2(std::size_t i) const { return data[4 * i + 3]; }
};

// Intersection over union in double; returns 0 when the union is empty.
inline double iou(float ax1, float ay1, float ax2, float ay2, float bx1,
                  float by1, float bx2, float by2) {
  const double ix1 = std::max(ax1, bx1);
  const double iy1 = std::max(ay1, by1);
  const double ix2 = std::min(ax2, bx2);
  const double iy2 = std::min(ay2, by2);
  const double iw = std::max(0.0, ix2 - ix1);
  const double ih = std::max(0.0, iy2 - iy1);
  const double inter = iw * ih;
  const double area_a =
      std::max(0.0, double(ax2) - ax1) * std::max(0.0, double(ay2) - ay1);
  const double area_b =
      std::max(0.0, double(bx2) - bx1) * std::max(0.0, double(by2) - by1);
  const double uni = area_a + area_b - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

inline double iou(const BoxView& boxes, std::size_t i, std::size_t j) {
  return iou(boxes.x1(i), boxes.y1(i), boxes.x2(i), boxes.y2(i), boxes.x1(j),
             boxes.y1(j), boxes.x2(j), boxes.y2(j));
}

enum class NmsOrder { Stable, Unstable };

inline const char* nms_order_name(NmsOrder o) {
  return o == NmsOrder::Stable ? "stable" : "unstable";
}

// Canonical candidate order: score descending, then x1, then y1, then the
// original index so the key is a total order.
inline std::vector<std::size_t> pre_nms_sort(const BoxView& boxes,
                                             const float* scores) {
  std::vector<std::size_t> perm(boxes.n);
  std::iota(perm.begin(), perm.end(), 0);
  std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    if (boxes.x1(a) != boxes.x1(b)) return boxes.x1(a) < boxes.x1(b);
    if (boxes.y1(a) != boxes.y1(b)) return boxes.y1(a) < boxes.y1(b);
    return a < b;
  });
  return perm;
}

// Greedy NMS. Returns kept candidate indices in visit order (score
// descending). Exactly tied scores expose the order policy: stable visits
// them in incoming order, unstable in reversed incoming order (a
// deterministic stand-in for a backend that does not promise tie order).
// pre_sorted means the caller already canonicalized the incoming order, and
// that order is then trusted for ties regardless of policy; this is why a
// deterministic pre-sort neutralizes unstable tie-breaking.
inline std::vector<std::size_t> nms(const BoxView& boxes, const float* scores,
                                    double iou_threshold, NmsOrder policy,
                                    bool pre_sorted) {
  const std::size_t n = boxes.n;
  const bool reverse_ties = policy == NmsOrder::Unstable && !pre_sorted;
  std::vector<std::size_t> visit(n);
  std::iota(visit.begin(), visit.end(), 0);
  std::sort(visit.begin(), visit.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return reverse_ties ? a > b : a < b;
  });

  std::vector<char> suppressed(n, 0);
  std::vector<std::size_t> kept;
  for (std::size_t vi = 0; vi < n; ++vi) {
    const std::size_t i = visit[vi];
    if (suppressed[i]) continue;
    kept.push_back(i);
    for (std::size_t vj = vi + 1; vj < n; ++vj) {
      const std::size_t j = visit[vj];
      if (!suppressed[j] && iou(boxes, i, j) > iou_threshold) {
        suppressed[j] = 1;
      }
    }
  }
  return kept;
}

}  // namespace driftcheck
