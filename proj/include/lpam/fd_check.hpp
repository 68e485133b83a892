#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "lpam/core.hpp"

namespace lpam {

/// Central-difference gradient with per-coordinate step 1e-6·max(1, |x_i|).
inline TwoBlockPoint fd_gradient(const std::function<double(const TwoBlockPoint&)>& f,
                                 const TwoBlockPoint& X, double rel_step = 1e-6) {
  TwoBlockPoint g = TwoBlockPoint::zeros(X.x1.size(), X.x2.size());
  TwoBlockPoint Y = X;
  auto sweep = [&](Vector& y, const Vector& x, Vector& out) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double h = rel_step * std::max(1.0, std::abs(x[i]));
      y[i] = x[i] + h;
      const double fp = f(Y);
      y[i] = x[i] - h;
      const double fm = f(Y);
      y[i] = x[i];
      out[i] = (fp - fm) / (2.0 * h);
    }
  };
  sweep(Y.x1, X.x1, g.x1);
  sweep(Y.x2, X.x2, g.x2);
  return g;
}

/// ‖a − b‖ / max(‖b‖, floor)
inline double relative_error(const TwoBlockPoint& a, const TwoBlockPoint& b, double floor = 1e-12) {
  return std::sqrt(squared_distance(a, b)) / std::max(b.norm(), floor);
}

}  // namespace lpam
