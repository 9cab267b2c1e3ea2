#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "driftcheck/errors.hpp"
#include "driftcheck/tensor.hpp"

namespace driftcheck {

struct ToleranceSpec {
  double atol = 1e-5;
  double rtol = 1e-5;
};

struct DiffStats {
  double max_abs_diff = 0.0;
  double mae = 0.0;
  double p95_abs_diff = 0.0;
  double ref_inf_norm = 0.0;
  std::int64_t numel = 0;
};

namespace detail {

inline void require_comparable(const Tensor& ref, const Tensor& tgt) {
  if (ref.shape() != tgt.shape()) {
    throw ShapeError("shape mismatch: " + shape_str(ref.shape()) + " vs " +
                     shape_str(tgt.shape()));
  }
  if (ref.dtype() != tgt.dtype()) {
    throw ShapeError("dtype mismatch in comparison");
  }
}

}  // namespace detail

// All accumulation in double, whatever the element type, so the statistics
// themselves do not drift.
inline DiffStats compute_diff_stats(const Tensor& ref, const Tensor& tgt) {
  detail::require_comparable(ref, tgt);
  const std::int64_t n = ref.numel();
  if (n == 0) throw ShapeError("diff stats over empty tensor");

  DiffStats s;
  s.numel = n;
  std::vector<double> diffs(static_cast<std::size_t>(n));
  double sum = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double r = ref.at_flat(i);
    const double d = std::fabs(r - tgt.at_flat(i));
    diffs[static_cast<std::size_t>(i)] = d;
    sum += d;
    s.max_abs_diff = std::max(s.max_abs_diff, d);
    s.ref_inf_norm = std::max(s.ref_inf_norm, std::fabs(r));
  }
  s.mae = sum / static_cast<double>(n);

  // Nearest-rank percentile: 1-based index ceil(0.95 * n) into the sorted
  // magnitudes.
  std::sort(diffs.begin(), diffs.end());
  const auto rank = static_cast<std::size_t>(
      std::ceil(0.95 * static_cast<double>(n)));
  s.p95_abs_diff = diffs[rank - 1];
  return s;
}

// Eq. 1 form: one global budget, max|ref-tgt| <= atol + rtol * max|ref|.
inline bool allclose_eq1(const Tensor& ref, const Tensor& tgt,
                         const ToleranceSpec& tol) {
  detail::require_comparable(ref, tgt);
  const std::int64_t n = ref.numel();
  double max_diff = 0.0;
  double inf_norm = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double r = ref.at_flat(i);
    max_diff = std::max(max_diff, std::fabs(r - tgt.at_flat(i)));
    inf_norm = std::max(inf_norm, std::fabs(r));
  }
  return max_diff <= tol.atol + tol.rtol * inf_norm;
}

// Strict per-element mode: every element gets its own budget from its own
// reference magnitude. Small elements in a tensor with large peers fail here
// long before they fail the global form.
inline bool allclose_elementwise(const Tensor& ref, const Tensor& tgt,
                                 const ToleranceSpec& tol) {
  detail::require_comparable(ref, tgt);
  const std::int64_t n = ref.numel();
  for (std::int64_t i = 0; i < n; ++i) {
    const double r = ref.at_flat(i);
    if (std::fabs(r - tgt.at_flat(i)) > tol.atol + tol.rtol * std::fabs(r)) {
      return false;
    }
  }
  return true;
}

enum class CloseMode { Eq1, Elementwise };

inline const char* close_mode_name(CloseMode m) {
  return m == CloseMode::Eq1 ? "eq1" : "elementwise";
}

inline CloseMode close_mode_from_string(const std::string& s) {
  if (s == "eq1") return CloseMode::Eq1;
  if (s == "elementwise") return CloseMode::Elementwise;
  throw InvalidConfigError("unknown verification mode: " + s);
}

inline bool allclose(const Tensor& ref, const Tensor& tgt,
                     const ToleranceSpec& tol, CloseMode mode) {
  return mode == CloseMode::Eq1 ? allclose_eq1(ref, tgt, tol)
                                : allclose_elementwise(ref, tgt, tol);
}

}  // namespace driftcheck
