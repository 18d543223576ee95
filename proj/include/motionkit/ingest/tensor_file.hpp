#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "motionkit/error.hpp"

namespace motionkit {

/// Dense f32 array with a row-major shape, as persisted on disk.
///
/// Layout: "MPTN" | version u8 = 1 | dtype u8 = 1 (f32le) | ndim u8 |
/// ndim x u32le dims | row-major f32le payload.
struct TensorFile {
  std::vector<std::uint32_t> shape;
  std::vector<float> values;

  std::size_t element_count() const {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           [](std::size_t acc, std::uint32_t d) { return acc * d; });
  }

  friend bool operator==(const TensorFile&, const TensorFile&) = default;
};

namespace tensor_format {
inline constexpr std::array<std::uint8_t, 4> kMagic{0x4D, 0x50, 0x54, 0x4E};
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::uint8_t kDtypeF32 = 1;
}  // namespace tensor_format

namespace detail {

inline void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFFu));
}

inline std::uint32_t get_u32le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_tensor(std::span<const float> values,
                                               std::span<const std::uint32_t> shape) {
  std::size_t count = 1;
  for (auto d : shape) count *= d;
  if (count != values.size()) {
    fail(ErrorCode::ShapeMismatch, "shape product " + std::to_string(count) + " != value count " +
                                       std::to_string(values.size()));
  }
  if (shape.size() > 255) fail(ErrorCode::ShapeMismatch, "too many dimensions");
  std::vector<std::uint8_t> out;
  out.reserve(7 + 4 * shape.size() + 4 * values.size());
  out.insert(out.end(), tensor_format::kMagic.begin(), tensor_format::kMagic.end());
  out.push_back(tensor_format::kVersion);
  out.push_back(tensor_format::kDtypeF32);
  out.push_back(static_cast<std::uint8_t>(shape.size()));
  for (auto d : shape) detail::put_u32le(out, d);
  for (float v : values) detail::put_u32le(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

inline TensorFile decode_tensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || !std::equal(tensor_format::kMagic.begin(), tensor_format::kMagic.end(), bytes.begin())) {
    fail(ErrorCode::BadMagic, "missing MPTN magic");
  }
  if (bytes.size() < 7) fail(ErrorCode::TruncatedPayload, "header truncated");
  if (bytes[4] != tensor_format::kVersion) fail(ErrorCode::BadMagic, "unsupported version");
  if (bytes[5] != tensor_format::kDtypeF32) fail(ErrorCode::BadMagic, "unsupported dtype");
  const std::size_t ndim = bytes[6];
  std::size_t pos = 7;
  if (bytes.size() < pos + 4 * ndim) fail(ErrorCode::TruncatedPayload, "dims truncated");
  TensorFile t;
  t.shape.reserve(ndim);
  for (std::size_t i = 0; i < ndim; ++i, pos += 4) t.shape.push_back(detail::get_u32le(bytes.data() + pos));
  const std::size_t count = t.element_count();
  if (bytes.size() - pos < 4 * count) fail(ErrorCode::TruncatedPayload, "payload truncated");
  if (bytes.size() - pos > 4 * count) fail(ErrorCode::ShapeMismatch, "payload longer than shape");
  t.values.resize(count);
  for (std::size_t i = 0; i < count; ++i, pos += 4) {
    t.values[i] = std::bit_cast<float>(detail::get_u32le(bytes.data() + pos));
  }
  return t;
}

inline void write_tensor(std::span<const float> values, std::span<const std::uint32_t> shape,
                         const std::filesystem::path& path) {
  const auto bytes = encode_tensor(values, shape);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

inline void write_tensor(const TensorFile& t, const std::filesystem::path& path) {
  write_tensor(t.values, t.shape, path);
}

inline TensorFile read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_tensor(bytes);
}

}  // namespace motionkit
