#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "lpam/core.hpp"

namespace lpam {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

/// Binary k-space sampling pattern in natural (unshifted) DFT index order.
struct Mask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> sampled;

  Mask() = default;
  Mask(std::size_t h, std::size_t w, bool value = false)
      : height(h), width(w), sampled(h * w, value ? 1 : 0) {}

  std::size_t size() const { return height * width; }
  std::size_t count() const {
    std::size_t c = 0;
    for (auto s : sampled) c += s != 0;
    return c;
  }
  double ratio() const { return size() == 0 ? 0.0 : double(count()) / double(size()); }
  bool operator==(const Mask&) const = default;
};

/// Unitary 2-D DFT restricted to a sampling mask: A = P F with F scaled by
/// 1/√(hw) in both directions. Twiddle tables are computed once, so a
/// constructed operator is immutable and safe to share across threads.
class MaskedDft {
public:
  explicit MaskedDft(Mask mask) : mask_(std::move(mask)) {
    if (mask_.height == 0 || mask_.width == 0 || mask_.sampled.size() != mask_.size())
      throw std::invalid_argument("MaskedDft: mask shape is inconsistent");
    row_twiddle_ = twiddles(mask_.width);
    col_twiddle_ = twiddles(mask_.height);
    scale_ = 1.0 / std::sqrt(double(mask_.size()));
  }

  std::size_t height() const { return mask_.height; }
  std::size_t width() const { return mask_.width; }
  std::size_t size() const { return mask_.size(); }
  const Mask& mask() const { return mask_; }

  /// Full unitary transform F x of a real image (no masking).
  ComplexVector transform(std::span<const double> x) const {
    check_size(x.size());
    ComplexVector c(x.begin(), x.end());
    apply(c, -1);
    return c;
  }

  /// Fᴴ y, the unitary inverse.
  ComplexVector inverse(std::span<const Complex> y) const {
    check_size(y.size());
    ComplexVector c(y.begin(), y.end());
    apply(c, +1);
    return c;
  }

  /// P F x, zero outside the mask.
  ComplexVector forward(std::span<const double> x) const {
    auto c = transform(x);
    apply_mask(c);
    return c;
  }

  /// Re(Fᴴ Pᵀ y).
  Vector adjoint(std::span<const Complex> y) const {
    check_size(y.size());
    ComplexVector c(y.begin(), y.end());
    apply_mask(c);
    apply(c, +1);
    Vector out(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
    return out;
  }

  void apply_mask(std::span<Complex> c) const {
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (!mask_.sampled[i]) c[i] = 0.0;
    }
  }

  /// ½ Σ_{mask} |(Fx)_j − f_j|²
  double fidelity(std::span<const double> x, std::span<const Complex> f) const {
    check_size(f.size());
    const auto c = transform(x);
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (mask_.sampled[i]) s += std::norm(c[i] - f[i]);
    }
    return 0.5 * s;
  }

  /// Re(Fᴴ Pᵀ(P F x − f))
  Vector grad_fidelity(std::span<const double> x, std::span<const Complex> f) const {
    check_size(f.size());
    auto c = transform(x);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = mask_.sampled[i] ? c[i] - f[i] : 0.0;
    apply(c, +1);
    Vector out(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
    return out;
  }

private:
  static ComplexVector twiddles(std::size_t n) {
    ComplexVector t(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double angle = 2.0 * std::numbers::pi * double(k) / double(n);
      t[k] = {std::cos(angle), std::sin(angle)};
    }
    return t;
  }

  void check_size(std::size_t n) const {
    if (n != mask_.size()) throw std::invalid_argument("MaskedDft: size mismatch with image shape");
  }

  // Separable transform, rows then columns; sign −1 forward, +1 inverse.
  void apply(ComplexVector& c, int sign) const {
    const std::size_t h = mask_.height;
    const std::size_t w = mask_.width;
    ComplexVector buf(std::max(h, w));
    for (std::size_t r = 0; r < h; ++r) {
      Complex* row = c.data() + r * w;
      for (std::size_t k = 0; k < w; ++k) {
        Complex acc = 0.0;
        for (std::size_t j = 0; j < w; ++j) acc += row[j] * twiddle(row_twiddle_, k * j, sign);
        buf[k] = acc;
      }
      std::copy(buf.begin(), buf.begin() + w, row);
    }
    for (std::size_t col = 0; col < w; ++col) {
      for (std::size_t k = 0; k < h; ++k) {
        Complex acc = 0.0;
        for (std::size_t j = 0; j < h; ++j)
          acc += c[j * w + col] * twiddle(col_twiddle_, k * j, sign);
        buf[k] = acc;
      }
      for (std::size_t k = 0; k < h; ++k) c[k * w + col] = buf[k] * scale_;
    }
  }

  static Complex twiddle(const ComplexVector& t, std::size_t kj, int sign) {
    const Complex z = t[kj % t.size()];
    return sign < 0 ? std::conj(z) : z;
  }

  Mask mask_;
  ComplexVector row_twiddle_;
  ComplexVector col_twiddle_;
  double scale_ = 1.0;
};

}  // namespace lpam
