#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "driftcheck/errors.hpp"

namespace driftcheck {

enum class DType : std::uint8_t { F32 = 0, F64 = 1 };

inline const char* dtype_name(DType d) {
  return d == DType::F32 ? "f32" : "f64";
}

using Shape = std::vector<std::int64_t>;

inline std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (std::int64_t e : shape) {
    if (e < 0) throw ShapeError("negative extent in shape");
    n *= e;
  }
  return n;  // rank-0 yields 1
}

inline std::string shape_str(const Shape& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  out += ")";
  return out;
}

// Row-major strides in elements.
inline std::vector<std::int64_t> row_major_strides(const Shape& shape) {
  std::vector<std::int64_t> strides(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) {
    strides[i - 1] = strides[i] * shape[i];
  }
  return strides;
}

// Dense row-major tensor holding either f32 or f64 elements. Exactly one of
// the two buffers is populated; everything numeric in the pipeline runs on
// f32, while f64 exists for file exchange and high-precision accumulation.
class Tensor {
 public:
  Tensor() : dtype_(DType::F32), data_(std::vector<float>{}) {}

  static Tensor zeros(DType dtype, Shape shape) {
    Tensor t;
    t.dtype_ = dtype;
    std::int64_t n = shape_numel(shape);
    t.shape_ = std::move(shape);
    if (dtype == DType::F32) {
      t.data_ = std::vector<float>(static_cast<std::size_t>(n), 0.0f);
    } else {
      t.data_ = std::vector<double>(static_cast<std::size_t>(n), 0.0);
    }
    return t;
  }

  static Tensor from_f32(Shape shape, std::vector<float> data) {
    if (shape_numel(shape) != static_cast<std::int64_t>(data.size())) {
      throw ShapeError("data size " + std::to_string(data.size()) +
                       " does not match shape " + shape_str(shape));
    }
    Tensor t;
    t.dtype_ = DType::F32;
    t.shape_ = std::move(shape);
    t.data_ = std::move(data);
    return t;
  }

  static Tensor from_f64(Shape shape, std::vector<double> data) {
    if (shape_numel(shape) != static_cast<std::int64_t>(data.size())) {
      throw ShapeError("data size " + std::to_string(data.size()) +
                       " does not match shape " + shape_str(shape));
    }
    Tensor t;
    t.dtype_ = DType::F64;
    t.shape_ = std::move(shape);
    t.data_ = std::move(data);
    return t;
  }

  static Tensor scalar(float v) { return from_f32({}, {v}); }

  DType dtype() const { return dtype_; }
  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::int64_t numel() const { return shape_numel(shape_); }

  std::vector<float>& f32() {
    if (dtype_ != DType::F32) throw ShapeError("tensor is not f32");
    return std::get<std::vector<float>>(data_);
  }
  const std::vector<float>& f32() const {
    if (dtype_ != DType::F32) throw ShapeError("tensor is not f32");
    return std::get<std::vector<float>>(data_);
  }
  std::vector<double>& f64() {
    if (dtype_ != DType::F64) throw ShapeError("tensor is not f64");
    return std::get<std::vector<double>>(data_);
  }
  const std::vector<double>& f64() const {
    if (dtype_ != DType::F64) throw ShapeError("tensor is not f64");
    return std::get<std::vector<double>>(data_);
  }

  // Dtype-agnostic element read, widened to double.
  double at_flat(std::int64_t i) const {
    if (dtype_ == DType::F32) return f32()[static_cast<std::size_t>(i)];
    return f64()[static_cast<std::size_t>(i)];
  }

  Tensor to(DType target) const {
    if (target == dtype_) return *this;
    std::int64_t n = numel();
    if (target == DType::F32) {
      std::vector<float> out(static_cast<std::size_t>(n));
      const auto& src = f64();
      for (std::int64_t i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] =
            static_cast<float>(src[static_cast<std::size_t>(i)]);
      }
      return from_f32(shape_, std::move(out));
    }
    std::vector<double> out(static_cast<std::size_t>(n));
    const auto& src = f32();
    for (std::int64_t i = 0; i < n; ++i) {
      out[static_cast<std::size_t>(i)] = src[static_cast<std::size_t>(i)];
    }
    return from_f64(shape_, std::move(out));
  }

 private:
  DType dtype_;
  Shape shape_;
  std::variant<std::vector<float>, std::vector<double>> data_;
};

}  // namespace driftcheck
