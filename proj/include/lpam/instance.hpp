#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpam/core.hpp"
#include "lpam/dft.hpp"

namespace lpam {

enum class MaskKind { radial, random };
enum class PhantomKind { shapes };

inline std::string to_string(MaskKind k) { return k == MaskKind::radial ? "radial" : "random"; }
inline MaskKind parse_mask_kind(const std::string& s) {
  if (s == "radial") return MaskKind::radial;
  if (s == "random") return MaskKind::random;
  throw std::invalid_argument("unknown mask kind '" + s + "' (expected radial|random)");
}
inline std::string to_string(PhantomKind) { return "shapes"; }
inline PhantomKind parse_phantom_kind(const std::string& s) {
  if (s == "shapes") return PhantomKind::shapes;
  throw std::invalid_argument("unknown phantom kind '" + s + "' (expected shapes)");
}

struct InstanceSpec {
  std::size_t height = 32;
  std::size_t width = 32;
  MaskKind mask = MaskKind::radial;
  double ratio = 0.3;
  double noise_std = 0.0;
  PhantomKind phantom = PhantomKind::shapes;
  std::uint64_t seed = 0;
};

/// Sampled k-space of both channels; entries outside the mask are exactly zero.
struct KSpaceData {
  ComplexVector f1;
  ComplexVector f2;
};

struct Instance {
  TwoBlockPoint truth;
  MaskedDft op;
  KSpaceData data;
};

namespace detail {

inline std::size_t target_count(double ratio, std::size_t total) {
  return std::clamp<std::size_t>(std::size_t(std::llround(ratio * double(total))), 1, total);
}

// Signed frequency of natural DFT index k along an axis of length n.
inline long centered_frequency(std::size_t k, std::size_t n) {
  return k < (n + 1) / 2 ? long(k) : long(k) - long(n);
}

}  // namespace detail

/// Straight spokes through the k-space center at equal angles. The spoke count
/// is the smallest that reaches the requested ratio; the highest-frequency
/// samples are then dropped until the count matches exactly.
inline Mask radial_mask(std::size_t h, std::size_t w, double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw std::invalid_argument("sampling ratio must lie in (0, 1]");
  const std::size_t total = h * w;
  const std::size_t target = detail::target_count(ratio, total);
  if (target == total) return Mask(h, w, true);

  const double radius = std::hypot(double(h) / 2.0, double(w) / 2.0) + 1.0;
  auto rasterize = [&](std::size_t spokes) {
    Mask m(h, w);
    for (std::size_t s = 0; s < spokes; ++s) {
      const double theta = std::numbers::pi * double(s) / double(spokes);
      const double c = std::cos(theta), sn = std::sin(theta);
      for (double t = -radius; t <= radius; t += 0.5) {
        const long fy = std::lround(t * sn);
        const long fx = std::lround(t * c);
        if (fy < -long(h) / 2 || fy >= long(h + 1) / 2) continue;
        if (fx < -long(w) / 2 || fx >= long(w + 1) / 2) continue;
        const std::size_t u = std::size_t((fy + long(h)) % long(h));
        const std::size_t v = std::size_t((fx + long(w)) % long(w));
        m.sampled[u * w + v] = 1;
      }
    }
    return m;
  };

  Mask m;
  for (std::size_t spokes = 1;; ++spokes) {
    m = rasterize(spokes);
    if (m.count() >= target) break;
    if (spokes > 4 * (h + w)) break;
  }

  std::vector<std::size_t> on;
  for (std::size_t i = 0; i < total; ++i)
    if (m.sampled[i]) on.push_back(i);
  auto radius2 = [&](std::size_t i) {
    const long fy = detail::centered_frequency(i / w, h);
    const long fx = detail::centered_frequency(i % w, w);
    return fy * fy + fx * fx;
  };
  std::sort(on.begin(), on.end(), [&](std::size_t a, std::size_t b) {
    const long ra = radius2(a), rb = radius2(b);
    return ra != rb ? ra > rb : a > b;
  });
  for (std::size_t k = 0; k < on.size() && m.count() > target; ++k) m.sampled[on[k]] = 0;
  return m;
}

/// Uniformly random sampling pattern with exactly round(ratio·hw) entries.
inline Mask random_mask(std::size_t h, std::size_t w, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw std::invalid_argument("sampling ratio must lie in (0, 1]");
  const std::size_t total = h * w;
  const std::size_t target = detail::target_count(ratio, total);
  std::vector<std::size_t> idx(total);
  for (std::size_t i = 0; i < total; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  Mask m(h, w);
  for (std::size_t k = 0; k < target; ++k) m.sampled[idx[k]] = 1;
  return m;
}

/// Two piecewise-constant images sharing the same ellipse supports but with
/// different per-region contrasts, each scaled to [0, 1] on a zero background.
inline TwoBlockPoint shapes_phantom(std::size_t h, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double side = double(std::min(h, w));
  const std::size_t regions = 4;
  TwoBlockPoint X = TwoBlockPoint::zeros(h * w, h * w);
  for (std::size_t r = 0; r < regions; ++r) {
    const double cy = (0.25 + 0.5 * unit(rng)) * double(h);
    const double cx = (0.25 + 0.5 * unit(rng)) * double(w);
    const double ry = (0.06 + 0.09 * unit(rng)) * side;
    const double rx = (0.06 + 0.09 * unit(rng)) * side;
    const double c1 = 0.3 + 0.7 * unit(rng);
    const double c2 = 0.3 + 0.7 * unit(rng);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double dy = (double(y) - cy) / ry;
        const double dx = (double(x) - cx) / rx;
        if (dy * dy + dx * dx <= 1.0) {
          X.x1[y * w + x] = c1;
          X.x2[y * w + x] = c2;
        }
      }
    }
  }
  for (Vector* img : {&X.x1, &X.x2}) {
    const double mx = *std::max_element(img->begin(), img->end());
    if (mx > 0.0)
      for (auto& v : *img) v /= mx;
  }
  return X;
}

inline Instance generate_instance(const InstanceSpec& spec) {
  if (spec.height == 0 || spec.width == 0) throw std::invalid_argument("image size must be positive");
  if (!(spec.ratio > 0.0 && spec.ratio <= 1.0)) throw std::invalid_argument("sampling ratio must lie in (0, 1]");
  if (!(spec.noise_std >= 0.0)) throw std::invalid_argument("noise standard deviation must be >= 0");

  // Independent streams for phantom, mask and noise.
  const std::uint64_t s = spec.seed;
  TwoBlockPoint truth = shapes_phantom(spec.height, spec.width, s ^ 0x9e3779b97f4a7c15ULL);
  Mask mask = spec.mask == MaskKind::radial
                  ? radial_mask(spec.height, spec.width, spec.ratio)
                  : random_mask(spec.height, spec.width, spec.ratio, s ^ 0xbf58476d1ce4e5b9ULL);
  MaskedDft op(std::move(mask));

  KSpaceData data{op.forward(truth.x1), op.forward(truth.x2)};
  if (spec.noise_std > 0.0) {
    std::mt19937_64 rng(s ^ 0x94d049bb133111ebULL);
    std::normal_distribution<double> noise(0.0, spec.noise_std);
    for (ComplexVector* f : {&data.f1, &data.f2}) {
      for (std::size_t i = 0; i < f->size(); ++i) {
        if (!op.mask().sampled[i]) continue;
        const double re = noise(rng);
        const double im = noise(rng);
        (*f)[i] += Complex(re, im);
      }
    }
  }
  return {std::move(truth), std::move(op), std::move(data)};
}

}  // namespace lpam
