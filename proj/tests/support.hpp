#pragma once

#include <cstdint>
#include <random>

#include "lpam/lpam.hpp"

namespace lpam::fixtures {

inline Vector random_vector(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Vector v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

inline TwoBlockPoint random_point(std::size_t n1, std::size_t n2, std::mt19937_64& rng, double scale = 1.0) {
  TwoBlockPoint X{random_vector(n1, rng, scale), random_vector(n2, rng, scale)};
  return X;
}

inline Instance small_instance(std::size_t h, std::size_t w, std::uint64_t seed, double ratio = 0.3,
                               MaskKind mask = MaskKind::random) {
  InstanceSpec s;
  s.height = h;
  s.width = w;
  s.ratio = ratio;
  s.mask = mask;
  s.seed = seed;
  return generate_instance(s);
}

}  // namespace lpam::fixtures
