#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "driftcheck/errors.hpp"
#include "driftcheck/tensor.hpp"

namespace driftcheck {

// Tensor container format, little-endian throughout:
//   "DRFT" | version u32 = 1 | dtype u8 | rank u8 | pad u8[2] = 0
//   | extents u64 x rank | payload, row-major
// dtype 0 is f32, 1 is f64. Round-trips are bit-exact.

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class ByteReader {
 public:
  ByteReader(const unsigned char* data, std::size_t size)
      : data_(data), size_(size) {}

  void take(void* dst, std::size_t n) {
    if (pos_ + n > size_) throw FormatError("truncated tensor file");
    std::memcpy(dst, data_ + pos_, n);
    pos_ += n;
  }

  std::uint8_t u8() {
    std::uint8_t v;
    take(&v, 1);
    return v;
  }

  std::uint32_t u32() {
    unsigned char b[4];
    take(b, 4);
    return static_cast<std::uint32_t>(b[0]) |
           (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
  }

  std::uint64_t u64() {
    unsigned char b[8];
    take(b, 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }

  std::size_t remaining() const { return size_ - pos_; }

 private:
  const unsigned char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline void write_tensor_file(const Tensor& x,
                              const std::filesystem::path& path) {
  std::string buf;
  buf.reserve(16 + x.rank() * 8 +
              static_cast<std::size_t>(x.numel()) *
                  (x.dtype() == DType::F32 ? 4 : 8));
  buf += "DRFT";
  detail::put_u32(buf, 1);
  buf.push_back(static_cast<char>(x.dtype() == DType::F32 ? 0 : 1));
  buf.push_back(static_cast<char>(x.rank()));
  buf.push_back(0);
  buf.push_back(0);
  for (std::int64_t e : x.shape()) {
    detail::put_u64(buf, static_cast<std::uint64_t>(e));
  }
  const std::int64_t n = x.numel();
  if (x.dtype() == DType::F32) {
    for (std::int64_t i = 0; i < n; ++i) {
      detail::put_u32(buf, std::bit_cast<std::uint32_t>(
                               x.f32()[static_cast<std::size_t>(i)]));
    }
  } else {
    for (std::int64_t i = 0; i < n; ++i) {
      detail::put_u64(buf, std::bit_cast<std::uint64_t>(
                               x.f64()[static_cast<std::size_t>(i)]));
    }
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError("cannot open for writing: " + path.string());
  f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!f) throw FormatError("write failed: " + path.string());
}

inline Tensor read_tensor_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open tensor file: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
  detail::ByteReader r(bytes.data(), bytes.size());

  char magic[4];
  r.take(magic, 4);
  if (std::memcmp(magic, "DRFT", 4) != 0) {
    throw FormatError("bad magic in " + path.string());
  }
  const std::uint32_t version = r.u32();
  if (version != 1) {
    throw FormatError("unsupported tensor file version " +
                      std::to_string(version));
  }
  const std::uint8_t dtype_code = r.u8();
  if (dtype_code > 1) throw FormatError("unknown dtype code");
  const std::uint8_t rank = r.u8();
  if (rank > 4) throw FormatError("rank above 4");
  if (r.u8() != 0 || r.u8() != 0) throw FormatError("nonzero padding");

  Shape shape(rank);
  for (std::uint8_t i = 0; i < rank; ++i) {
    const std::uint64_t e = r.u64();
    if (e > static_cast<std::uint64_t>(INT64_MAX)) {
      throw FormatError("extent overflow");
    }
    shape[i] = static_cast<std::int64_t>(e);
  }
  const std::int64_t n = shape_numel(shape);

  if (dtype_code == 0) {
    std::vector<float> data(static_cast<std::size_t>(n));
    for (auto& v : data) v = std::bit_cast<float>(r.u32());
    if (r.remaining() != 0) throw FormatError("trailing bytes");
    return Tensor::from_f32(std::move(shape), std::move(data));
  }
  std::vector<double> data(static_cast<std::size_t>(n));
  for (auto& v : data) v = std::bit_cast<double>(r.u64());
  if (r.remaining() != 0) throw FormatError("trailing bytes");
  return Tensor::from_f64(std::move(shape), std::move(data));
}

}  // namespace driftcheck
