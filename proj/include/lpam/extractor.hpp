#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpam/core.hpp"
#include "lpam/smoothing.hpp"

namespace lpam {

/// Smoothed ReLU: 0 for x ≤ −δ, x²/(4δ) + x/2 + δ/4 on (−δ, δ), x for x ≥ δ.
inline double smoothed_relu(double x, double delta) {
  if (x <= -delta) return 0.0;
  if (x >= delta) return x;
  return x * x / (4.0 * delta) + 0.5 * x + 0.25 * delta;
}

inline double smoothed_relu_derivative(double x, double delta) {
  if (x <= -delta) return 0.0;
  if (x >= delta) return 1.0;
  return x / (2.0 * delta) + 0.5;
}

/// One stride-1 "same" convolution. Weights are [out][in][kh][kw] row-major
/// (cross-correlation, as in CNN frameworks), followed by one bias per output.
struct ConvLayer {
  std::uint32_t in_ch = 0;
  std::uint32_t out_ch = 0;
  std::uint32_t kh = 1;
  std::uint32_t kw = 1;
  Vector weights;
  Vector bias;

  std::size_t weight_count() const { return std::size_t(in_ch) * out_ch * kh * kw; }

  double w(std::size_t o, std::size_t i, std::size_t dy, std::size_t dx) const {
    return weights[((o * in_ch + i) * kh + dy) * kw + dx];
  }

  void validate() const {
    if (in_ch == 0 || out_ch == 0) throw std::invalid_argument("ConvLayer: zero channels");
    if (kh % 2 == 0 || kw % 2 == 0) throw std::invalid_argument("ConvLayer: kernel sides must be odd");
    if (weights.size() != weight_count()) throw std::invalid_argument("ConvLayer: weight count mismatch");
    if (bias.size() != out_ch) throw std::invalid_argument("ConvLayer: bias count mismatch");
  }

  /// Schur-test bound on the operator norm of the linear part.
  double operator_norm_bound() const {
    double max_row = 0.0;
    for (std::size_t o = 0; o < out_ch; ++o) {
      double s = 0.0;
      for (std::size_t i = 0; i < in_ch; ++i)
        for (std::size_t dy = 0; dy < kh; ++dy)
          for (std::size_t dx = 0; dx < kw; ++dx) s += std::abs(w(o, i, dy, dx));
      max_row = std::max(max_row, s);
    }
    double max_col = 0.0;
    for (std::size_t i = 0; i < in_ch; ++i) {
      double s = 0.0;
      for (std::size_t o = 0; o < out_ch; ++o)
        for (std::size_t dy = 0; dy < kh; ++dy)
          for (std::size_t dx = 0; dx < kw; ++dx) s += std::abs(w(o, i, dy, dx));
      max_col = std::max(max_col, s);
    }
    return std::sqrt(max_row * max_col);
  }

  bool operator==(const ConvLayer&) const = default;
};

namespace detail {

// in: [in_ch][h][w] → out: [out_ch][h][w]
inline Vector conv_forward(const ConvLayer& L, std::span<const double> in, std::size_t h,
                           std::size_t w) {
  const std::size_t hw = h * w;
  const long ph = long(L.kh / 2);
  const long pw = long(L.kw / 2);
  Vector out(std::size_t(L.out_ch) * hw);
  for (std::size_t o = 0; o < L.out_ch; ++o) {
    double* dst = out.data() + o * hw;
    std::fill(dst, dst + hw, L.bias[o]);
    for (std::size_t i = 0; i < L.in_ch; ++i) {
      const double* src = in.data() + i * hw;
      for (std::size_t dy = 0; dy < L.kh; ++dy) {
        for (std::size_t dx = 0; dx < L.kw; ++dx) {
          const double k = L.w(o, i, dy, dx);
          if (k == 0.0) continue;
          const long oy = long(dy) - ph;
          const long ox = long(dx) - pw;
          for (long y = std::max(0L, -oy); y < std::min(long(h), long(h) - oy); ++y) {
            const double* srow = src + (y + oy) * long(w);
            double* drow = dst + y * long(w);
            for (long x = std::max(0L, -ox); x < std::min(long(w), long(w) - ox); ++x)
              drow[x] += k * srow[x + ox];
          }
        }
      }
    }
  }
  return out;
}

// Transpose of the linear part: grad_out [out_ch][h][w] → grad_in [in_ch][h][w]
inline Vector conv_backward(const ConvLayer& L, std::span<const double> grad_out, std::size_t h,
                            std::size_t w) {
  const std::size_t hw = h * w;
  const long ph = long(L.kh / 2);
  const long pw = long(L.kw / 2);
  Vector grad_in(std::size_t(L.in_ch) * hw, 0.0);
  for (std::size_t o = 0; o < L.out_ch; ++o) {
    const double* go = grad_out.data() + o * hw;
    for (std::size_t i = 0; i < L.in_ch; ++i) {
      double* gi = grad_in.data() + i * hw;
      for (std::size_t dy = 0; dy < L.kh; ++dy) {
        for (std::size_t dx = 0; dx < L.kw; ++dx) {
          const double k = L.w(o, i, dy, dx);
          if (k == 0.0) continue;
          const long oy = long(dy) - ph;
          const long ox = long(dx) - pw;
          for (long y = std::max(0L, -oy); y < std::min(long(h), long(h) - oy); ++y) {
            double* irow = gi + (y + oy) * long(w);
            const double* orow = go + y * long(w);
            for (long x = std::max(0L, -ox); x < std::min(long(w), long(w) - ox); ++x)
              irow[x + ox] += k * orow[x];
          }
        }
      }
    }
  }
  return grad_in;
}

}  // namespace detail

/// Fixed-weight joint feature map g: the two images enter as a 2-channel input,
/// every layer but the last is followed by the smoothed ReLU, and the output
/// channels at pixel i form the group g_i(X).
class FeatureExtractor {
public:
  FeatureExtractor() = default;
  FeatureExtractor(std::vector<ConvLayer> layers, double act_delta)
      : layers_(std::move(layers)), act_delta_(act_delta) {
    if (layers_.empty()) throw std::invalid_argument("FeatureExtractor: no layers");
    if (!(act_delta_ > 0.0)) throw std::invalid_argument("FeatureExtractor: act_delta must be > 0");
    if (layers_.front().in_ch != 2)
      throw std::invalid_argument("FeatureExtractor: first layer must take 2 input channels");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      layers_[l].validate();
      if (l > 0 && layers_[l].in_ch != layers_[l - 1].out_ch)
        throw std::invalid_argument("FeatureExtractor: layer " + std::to_string(l) +
                                    " input channels do not match previous output");
    }
  }

  /// Single 1×1 layer with the identity kernel and no activation: g(X) = X.
  static FeatureExtractor identity(double act_delta = 0.01) {
    ConvLayer L{2, 2, 1, 1, {1.0, 0.0, 0.0, 1.0}, {0.0, 0.0}};
    return FeatureExtractor({L}, act_delta);
  }

  /// Deterministic random weights, N(0, 1/fan_in), zero bias. 3×3 kernels.
  static FeatureExtractor random(std::size_t num_layers, std::size_t channels, double act_delta,
                                 std::uint64_t seed, std::uint32_t kernel = 3) {
    if (num_layers == 0 || channels == 0)
      throw std::invalid_argument("FeatureExtractor::random: need at least one layer and channel");
    std::mt19937_64 rng(seed);
    std::vector<ConvLayer> layers;
    std::uint32_t in = 2;
    for (std::size_t l = 0; l < num_layers; ++l) {
      ConvLayer L;
      L.in_ch = in;
      L.out_ch = std::uint32_t(channels);
      L.kh = L.kw = kernel;
      const double fan_in = double(L.in_ch) * kernel * kernel;
      std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(fan_in));
      L.weights.resize(L.weight_count());
      for (auto& v : L.weights) v = dist(rng);
      L.bias.assign(L.out_ch, 0.0);
      layers.push_back(std::move(L));
      in = std::uint32_t(channels);
    }
    return FeatureExtractor(std::move(layers), act_delta);
  }

  const std::vector<ConvLayer>& layers() const { return layers_; }
  double act_delta() const { return act_delta_; }
  std::size_t output_channels() const { return layers_.back().out_ch; }

  /// Pre-activation outputs of each layer, kept for the backward pass.
  struct Tape {
    std::vector<Vector> pre;
  };

  GroupedFeatures forward(const TwoBlockPoint& X, std::size_t h, std::size_t w,
                          Tape* tape = nullptr) const {
    Vector a = stack_input(X, h, w);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Vector z = detail::conv_forward(layers_[l], a, h, w);
      if (l + 1 == layers_.size()) {
        if (tape) tape->pre.push_back(z);
        return to_groups(z, layers_[l].out_ch, h * w);
      }
      a.resize(z.size());
      for (std::size_t j = 0; j < z.size(); ++j) a[j] = smoothed_relu(z[j], act_delta_);
      if (tape) tape->pre.push_back(std::move(z));
    }
    return {};  // unreachable, layers_ is nonempty
  }

  /// ∇_{1,2}g(X)ᵀ w, recomputing the forward pass.
  TwoBlockPoint vjp(const TwoBlockPoint& X, std::size_t h, std::size_t w,
                    const GroupedFeatures& weights) const {
    Tape tape;
    forward(X, h, w, &tape);
    return vjp(tape, h, w, weights);
  }

  TwoBlockPoint vjp(const Tape& tape, std::size_t h, std::size_t w,
                    const GroupedFeatures& weights) const {
    const std::size_t hw = h * w;
    if (weights.num_groups() != hw || weights.group_dim() != output_channels())
      throw std::invalid_argument("FeatureExtractor::vjp: weight shape mismatch");
    if (tape.pre.size() != layers_.size())
      throw std::invalid_argument("FeatureExtractor::vjp: tape does not match layers");
    Vector grad = from_groups(weights, hw);
    for (std::size_t l = layers_.size(); l-- > 0;) {
      if (l + 1 < layers_.size()) {
        const Vector& z = tape.pre[l];
        for (std::size_t j = 0; j < grad.size(); ++j)
          grad[j] *= smoothed_relu_derivative(z[j], act_delta_);
      }
      grad = detail::conv_backward(layers_[l], grad, h, w);
    }
    return {Vector(grad.begin(), grad.begin() + long(hw)), Vector(grad.begin() + long(hw), grad.end())};
  }

  /// Lipschitz bound of X ↦ g(X); the activation is 1-Lipschitz.
  double lipschitz_bound() const {
    double a = 1.0;
    for (const auto& L : layers_) a *= L.operator_norm_bound();
    return a;
  }

  /// Lipschitz bound of X ↦ ∇g(X) in operator norm. The activation has
  /// |σ''| ≤ 1/(2δ); for z_l = W_l σ(z_{l−1}),
  ///   c_l ≤ ‖W_l‖ (a_{l−1}² / (2δ) + c_{l−1}),  a_l = ‖W_l‖ a_{l−1}.
  double jacobian_lipschitz_bound() const {
    double a = layers_.front().operator_norm_bound();
    double c = 0.0;
    for (std::size_t l = 1; l < layers_.size(); ++l) {
      const double wn = layers_[l].operator_norm_bound();
      c = wn * (a * a / (2.0 * act_delta_) + c);
      a *= wn;
    }
    return c;
  }

  bool operator==(const FeatureExtractor&) const = default;

private:
  static Vector stack_input(const TwoBlockPoint& X, std::size_t h, std::size_t w) {
    if (X.x1.size() != h * w || X.x2.size() != h * w)
      throw std::invalid_argument("FeatureExtractor: images do not match h x w");
    Vector a;
    a.reserve(2 * h * w);
    a.insert(a.end(), X.x1.begin(), X.x1.end());
    a.insert(a.end(), X.x2.begin(), X.x2.end());
    return a;
  }

  static GroupedFeatures to_groups(const Vector& chw, std::size_t channels, std::size_t hw) {
    GroupedFeatures f(hw, channels);
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t p = 0; p < hw; ++p) f.values()[p * channels + c] = chw[c * hw + p];
    return f;
  }

  static Vector from_groups(const GroupedFeatures& f, std::size_t hw) {
    const std::size_t channels = f.group_dim();
    Vector chw(channels * hw);
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t p = 0; p < hw; ++p) chw[c * hw + p] = f.values()[p * channels + c];
    return chw;
  }

  std::vector<ConvLayer> layers_;
  double act_delta_ = 0.01;
};

}  // namespace lpam
