#pragma once
// Versioned binary tensor container shared by the encoder and forest
// artifacts. Layout after the 7 magic bytes, repeated until EOF:
//   u32 name length, name bytes, u32 rank, u32 dims[rank],
//   f32 data, row-major, little-endian.
// Round-trips are bit-exact; a wrong magic is a VersionMismatch.

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "inspl/matrix.hpp"

namespace inspl {

inline constexpr std::array<char, 7> kEncoderMagic = {'I', 'N', 'S', 'P',
                                                      'L', '1', '\0'};
inline constexpr std::array<char, 7> kForestMagic = {'I', 'N', 'S', 'P',
                                                     'F', '1', '\0'};

namespace detail {

inline void write_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {
      static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
      static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
  write_u32(out, static_cast<std::uint32_t>(v));
  write_u32(out, static_cast<std::uint32_t>(v >> 32));
}

inline void write_f32(std::ostream& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  write_u32(out, bits);
}

inline bool read_u32(std::istream& in, std::uint32_t& v) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) return false;
  v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
      (static_cast<std::uint32_t>(b[2]) << 16) |
      (static_cast<std::uint32_t>(b[3]) << 24);
  return true;
}

inline std::uint32_t read_u32_or_fail(std::istream& in, const std::string& ctx) {
  std::uint32_t v = 0;
  require(read_u32(in, v), ErrorCode::VersionMismatch, ctx + ": truncated");
  return v;
}

inline std::uint64_t read_u64_or_fail(std::istream& in, const std::string& ctx) {
  const std::uint64_t lo = read_u32_or_fail(in, ctx);
  const std::uint64_t hi = read_u32_or_fail(in, ctx);
  return lo | (hi << 32);
}

inline float read_f32_or_fail(std::istream& in, const std::string& ctx) {
  const std::uint32_t bits = read_u32_or_fail(in, ctx);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

inline void check_magic(std::istream& in, const std::array<char, 7>& magic,
                        const std::string& path) {
  std::array<char, 7> got{};
  require(static_cast<bool>(in.read(got.data(), got.size())) && got == magic,
          ErrorCode::VersionMismatch, path + ": bad or foreign magic bytes");
}

}  // namespace detail

using NamedTensors = std::vector<std::pair<std::string, Matrixf>>;

inline void save_tensors(const std::string& path, const NamedTensors& tensors) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::IoError, "cannot write " + path);
  out.write(kEncoderMagic.data(), kEncoderMagic.size());
  for (const auto& [name, t] : tensors) {
    detail::write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::write_u32(out, 2);
    detail::write_u32(out, static_cast<std::uint32_t>(t.rows()));
    detail::write_u32(out, static_cast<std::uint32_t>(t.cols()));
    for (float v : t.raw()) detail::write_f32(out, v);
  }
  require(out.good(), ErrorCode::IoError, "short write to " + path);
}

inline NamedTensors load_tensors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::IoError, "cannot open " + path);
  detail::check_magic(in, kEncoderMagic, path);
  NamedTensors tensors;
  std::uint32_t name_len = 0;
  while (detail::read_u32(in, name_len)) {
    require(name_len > 0 && name_len < 4096, ErrorCode::VersionMismatch,
            path + ": implausible tensor name length");
    std::string name(name_len, '\0');
    require(static_cast<bool>(in.read(name.data(), name_len)),
            ErrorCode::VersionMismatch, path + ": truncated name");
    const std::uint32_t rank = detail::read_u32_or_fail(in, path);
    require(rank == 2, ErrorCode::VersionMismatch,
            path + ": unsupported tensor rank " + std::to_string(rank));
    const std::uint32_t rows = detail::read_u32_or_fail(in, path);
    const std::uint32_t cols = detail::read_u32_or_fail(in, path);
    Matrixf t(rows, cols);
    for (auto& v : t.raw()) v = detail::read_f32_or_fail(in, path);
    tensors.emplace_back(std::move(name), std::move(t));
  }
  return tensors;
}

}  // namespace inspl
