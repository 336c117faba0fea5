#pragma once

// Binary snapshot format (little-endian):
//   "CGPE"  u32 version = 1  u32 nx  u32 ny  f64 ax bx ay by  f64 t
//   nx*ny pairs (re f64, im f64), row-major.

#include "cgpe/splitstep/field2d.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

namespace cgpe::splitstep {

namespace detail {

template <class T>
void put_le(std::vector<unsigned char>& out, T value) {
  std::array<unsigned char, sizeof(T)> b{};
  std::memcpy(b.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  out.insert(out.end(), b.begin(), b.end());
}

template <class T>
T get_le(const unsigned char*& p, const unsigned char* end) {
  if (end - p < static_cast<std::ptrdiff_t>(sizeof(T))) throw std::runtime_error("snapshot truncated");
  std::array<unsigned char, sizeof(T)> b{};
  std::memcpy(b.data(), p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  p += sizeof(T);
  T v;
  std::memcpy(&v, b.data(), sizeof(T));
  return v;
}

}  // namespace detail

inline std::vector<unsigned char> encode_snapshot(const Field2D& f) {
  std::vector<unsigned char> out;
  out.reserve(56 + 16 * f.values.size());
  for (char c : {'C', 'G', 'P', 'E'}) out.push_back(static_cast<unsigned char>(c));
  detail::put_le<std::uint32_t>(out, 1);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.grid.nx));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.grid.ny));
  for (double v : {f.grid.ax, f.grid.bx, f.grid.ay, f.grid.by, f.t}) detail::put_le<double>(out, v);
  for (const auto& v : f.values) {
    detail::put_le<double>(out, v.real());
    detail::put_le<double>(out, v.imag());
  }
  return out;
}

inline Field2D decode_snapshot(const std::vector<unsigned char>& bytes) {
  const unsigned char* p = bytes.data();
  const unsigned char* end = p + bytes.size();
  if (bytes.size() < 4 || std::memcmp(p, "CGPE", 4) != 0) throw std::runtime_error("not a snapshot (bad magic)");
  p += 4;
  const auto version = detail::get_le<std::uint32_t>(p, end);
  if (version != 1) throw std::runtime_error("unsupported snapshot version " + std::to_string(version));
  Grid2D g;
  g.nx = static_cast<int>(detail::get_le<std::uint32_t>(p, end));
  g.ny = static_cast<int>(detail::get_le<std::uint32_t>(p, end));
  g.ax = detail::get_le<double>(p, end);
  g.bx = detail::get_le<double>(p, end);
  g.ay = detail::get_le<double>(p, end);
  g.by = detail::get_le<double>(p, end);
  const double t = detail::get_le<double>(p, end);
  Field2D f(g, t);
  if (static_cast<std::size_t>(end - p) != 16 * f.values.size()) throw std::runtime_error("snapshot size mismatch");
  for (auto& v : f.values) {
    const double re = detail::get_le<double>(p, end);
    const double im = detail::get_le<double>(p, end);
    v = cdouble(re, im);
  }
  return f;
}

inline void write_snapshot(const Field2D& f, const std::filesystem::path& path) {
  const auto bytes = encode_snapshot(f);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write snapshot '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("error writing snapshot '" + path.string() + "'");
}

inline Field2D read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open snapshot '" + path.string() + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_snapshot(bytes);
}

}  // namespace cgpe::splitstep
