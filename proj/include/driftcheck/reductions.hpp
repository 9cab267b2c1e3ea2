#pragma once

#include <cstddef>

#include "driftcheck/errors.hpp"

namespace driftcheck {

enum class ReductionOrder { Sequential, Pairwise };

inline const char* reduction_order_name(ReductionOrder r) {
  return r == ReductionOrder::Sequential ? "sequential" : "pairwise";
}

// Left-to-right accumulation in the element type. This is the reference
// order: rounding happens after every single add.
template <typename T>
T sum_sequential(const T* data, std::size_t n) {
  if (n == 0) throw EmptyReductionError("sum over zero elements");
  T acc = data[0];
  for (std::size_t i = 1; i < n; ++i) acc += data[i];
  return acc;
}

// Balanced tree: split at floor(n/2), add the two halves. Partial sums stay
// in the element type, so the result differs from the sequential order
// whenever intermediate rounding differs, which is the drift being studied.
template <typename T>
T sum_pairwise(const T* data, std::size_t n) {
  if (n == 0) throw EmptyReductionError("sum over zero elements");
  if (n == 1) return data[0];
  std::size_t mid = n / 2;
  return sum_pairwise(data, mid) + sum_pairwise(data + mid, n - mid);
}

template <typename T>
T reduce_sum(const T* data, std::size_t n, ReductionOrder order) {
  return order == ReductionOrder::Sequential ? sum_sequential(data, n)
                                             : sum_pairwise(data, n);
}

template <typename Container>
auto reduce_sum(const Container& c, ReductionOrder order) {
  return reduce_sum(c.data(), c.size(), order);
}

}  // namespace driftcheck
