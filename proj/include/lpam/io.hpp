#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpam/core.hpp"
#include "lpam/dft.hpp"
#include "lpam/extractor.hpp"

namespace lpam::io {

// Weight file:
//   "LPAMWGT1" | u32 layer_count | f64 act_delta |
//   per layer: u32 in_ch, u32 out_ch, u32 kh, u32 kw,
//              f64 weights[out_ch·in_ch·kh·kw] ([out][in][kh][kw]), f64 bias[out_ch]
// Array file:
//   "LPAMARR1" | u32 dtype | u32 rows | u32 cols | payload
//   dtype 0 = f64, 1 = complex (re, im as two f64), 2 = bool as u8
// All integers and floats little-endian.

inline constexpr std::array<char, 8> kWeightMagic{'L', 'P', 'A', 'M', 'W', 'G', 'T', '1'};
inline constexpr std::array<char, 8> kArrayMagic{'L', 'P', 'A', 'M', 'A', 'R', 'R', '1'};

enum class DType : std::uint32_t { f64 = 0, c128 = 1, u8 = 2 };

class FormatError : public std::runtime_error {
public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = char((v >> (8 * i)) & 0xffu);
  os.write(b, 4);
}

inline void put_f64(std::ostream& os, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = char((bits >> (8 * i)) & 0xffu);
  os.write(b, 8);
}

inline void read_exact(std::istream& is, char* dst, std::size_t n) {
  is.read(dst, std::streamsize(n));
  if (std::size_t(is.gcount()) != n) throw FormatError("unexpected end of file");
}

inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  read_exact(is, reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
  return v;
}

inline double get_f64(std::istream& is) {
  unsigned char b[8];
  read_exact(is, reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

inline void expect_magic(std::istream& is, const std::array<char, 8>& magic) {
  std::array<char, 8> got{};
  read_exact(is, got.data(), got.size());
  if (got != magic) throw FormatError("bad magic: expected " + std::string(magic.data(), magic.size()));
}

inline void expect_eof(std::istream& is) {
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after payload");
}

}  // namespace detail

inline void write_weights(std::ostream& os, const FeatureExtractor& g) {
  os.write(kWeightMagic.data(), kWeightMagic.size());
  detail::put_u32(os, std::uint32_t(g.layers().size()));
  detail::put_f64(os, g.act_delta());
  for (const auto& L : g.layers()) {
    detail::put_u32(os, L.in_ch);
    detail::put_u32(os, L.out_ch);
    detail::put_u32(os, L.kh);
    detail::put_u32(os, L.kw);
    for (double w : L.weights) detail::put_f64(os, w);
    for (double b : L.bias) detail::put_f64(os, b);
  }
}

inline FeatureExtractor read_weights(std::istream& is) {
  detail::expect_magic(is, kWeightMagic);
  const std::uint32_t count = detail::get_u32(is);
  if (count == 0 || count > 1024) throw FormatError("implausible layer count " + std::to_string(count));
  const double act_delta = detail::get_f64(is);
  std::vector<ConvLayer> layers(count);
  for (auto& L : layers) {
    L.in_ch = detail::get_u32(is);
    L.out_ch = detail::get_u32(is);
    L.kh = detail::get_u32(is);
    L.kw = detail::get_u32(is);
    if (L.weight_count() > (std::size_t(1) << 28)) throw FormatError("layer too large");
    L.weights.resize(L.weight_count());
    for (auto& w : L.weights) w = detail::get_f64(is);
    L.bias.resize(L.out_ch);
    for (auto& b : L.bias) b = detail::get_f64(is);
  }
  detail::expect_eof(is);
  try {
    return FeatureExtractor(std::move(layers), act_delta);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("invalid extractor: ") + e.what());
  }
}

/// Decoded array file; exactly one payload vector is populated.
struct Array {
  DType dtype = DType::f64;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  Vector real;
  ComplexVector complex;
  std::vector<std::uint8_t> bytes;
};

inline void write_header(std::ostream& os, DType t, std::size_t rows, std::size_t cols) {
  os.write(kArrayMagic.data(), kArrayMagic.size());
  detail::put_u32(os, std::uint32_t(t));
  detail::put_u32(os, std::uint32_t(rows));
  detail::put_u32(os, std::uint32_t(cols));
}

inline void write_array(std::ostream& os, std::size_t rows, std::size_t cols, std::span<const double> v) {
  if (v.size() != rows * cols) throw std::invalid_argument("write_array: shape mismatch");
  write_header(os, DType::f64, rows, cols);
  for (double x : v) detail::put_f64(os, x);
}

inline void write_array(std::ostream& os, std::size_t rows, std::size_t cols, std::span<const Complex> v) {
  if (v.size() != rows * cols) throw std::invalid_argument("write_array: shape mismatch");
  write_header(os, DType::c128, rows, cols);
  for (const auto& z : v) {
    detail::put_f64(os, z.real());
    detail::put_f64(os, z.imag());
  }
}

inline void write_array(std::ostream& os, const Mask& m) {
  write_header(os, DType::u8, m.height, m.width);
  for (auto s : m.sampled) os.put(char(s ? 1 : 0));
}

inline Array read_array(std::istream& is) {
  detail::expect_magic(is, kArrayMagic);
  Array a;
  const std::uint32_t t = detail::get_u32(is);
  if (t > 2) throw FormatError("unknown dtype tag " + std::to_string(t));
  a.dtype = DType(t);
  a.rows = detail::get_u32(is);
  a.cols = detail::get_u32(is);
  const std::size_t n = std::size_t(a.rows) * a.cols;
  if (n > (std::size_t(1) << 30)) throw FormatError("array too large");
  switch (a.dtype) {
    case DType::f64:
      a.real.resize(n);
      for (auto& x : a.real) x = detail::get_f64(is);
      break;
    case DType::c128:
      a.complex.resize(n);
      for (auto& z : a.complex) {
        const double re = detail::get_f64(is);
        const double im = detail::get_f64(is);
        z = {re, im};
      }
      break;
    case DType::u8:
      a.bytes.resize(n);
      detail::read_exact(is, reinterpret_cast<char*>(a.bytes.data()), n);
      for (auto b : a.bytes)
        if (b > 1) throw FormatError("bool array holds a value other than 0/1");
      break;
  }
  detail::expect_eof(is);
  return a;
}

// File helpers that name the path on failure.

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  return os;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + path + "' for reading");
  return is;
}

template <class Fn>
void write_file(const std::string& path, Fn&& fn) {
  auto os = open_out(path);
  fn(os);
  os.flush();
  if (!os) throw std::runtime_error("write to '" + path + "' failed");
}

inline Vector load_real(const std::string& path, std::size_t rows, std::size_t cols) {
  auto is = open_in(path);
  Array a = read_array(is);
  if (a.dtype != DType::f64 || a.rows != rows || a.cols != cols)
    throw FormatError("'" + path + "' is not a " + std::to_string(rows) + "x" + std::to_string(cols) + " f64 array");
  return std::move(a.real);
}

inline ComplexVector load_complex(const std::string& path, std::size_t rows, std::size_t cols) {
  auto is = open_in(path);
  Array a = read_array(is);
  if (a.dtype != DType::c128 || a.rows != rows || a.cols != cols)
    throw FormatError("'" + path + "' is not a " + std::to_string(rows) + "x" + std::to_string(cols) + " complex array");
  return std::move(a.complex);
}

inline Mask load_mask(const std::string& path) {
  auto is = open_in(path);
  Array a = read_array(is);
  if (a.dtype != DType::u8) throw FormatError("'" + path + "' is not a bool array");
  Mask m(a.rows, a.cols);
  m.sampled = std::move(a.bytes);
  return m;
}

}  // namespace lpam::io
