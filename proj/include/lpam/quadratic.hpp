#pragma once

#include <optional>
#include <span>
#include <stdexcept>

#include "lpam/core.hpp"

namespace lpam {

// H1 = ½‖x1‖², H2 = ½‖x2‖², H = ½‖x1 − x2‖². Smooth already, so ε is ignored.
// Unique minimizer at the origin.
class QuadraticToy {
public:
  explicit QuadraticToy(std::size_t n = 1) : n_(n) {
    if (n == 0) throw std::invalid_argument("QuadraticToy: dimension must be positive");
  }

  std::size_t size1() const { return n_; }
  std::size_t size2() const { return n_; }

  double h1(std::span<const double> x1, double) const { return 0.5 * squared_norm(x1); }
  double h2(std::span<const double> x2, double) const { return 0.5 * squared_norm(x2); }
  double h(std::span<const double> x1, std::span<const double> x2, double) const {
    return 0.5 * squared_distance(x1, x2);
  }

  Vector grad_h1(std::span<const double> x1, double) const { return {x1.begin(), x1.end()}; }
  Vector grad_h2(std::span<const double> x2, double) const { return {x2.begin(), x2.end()}; }

  Vector grad1_h(std::span<const double> x1, std::span<const double> x2, double) const {
    check(x1, x2);
    Vector g(n_);
    for (std::size_t i = 0; i < n_; ++i) g[i] = x1[i] - x2[i];
    return g;
  }
  Vector grad2_h(std::span<const double> x1, std::span<const double> x2, double) const {
    check(x1, x2);
    Vector g(n_);
    for (std::size_t i = 0; i < n_; ++i) g[i] = x2[i] - x1[i];
    return g;
  }

  // 1 (∇H1) + 1 (∇H2) + 2 (∇_{1,2}H, Hessian eigenvalues {0, 2})
  std::optional<double> lipschitz(double) const { return 4.0; }
  double m(double) const { return 0.0; }

  double phi_limit(const TwoBlockPoint& X) const {
    return h1(X.x1, 1.0) + h2(X.x2, 1.0) + h(X.x1, X.x2, 1.0);
  }

private:
  void check(std::span<const double> x1, std::span<const double> x2) const {
    if (x1.size() != n_ || x2.size() != n_)
      throw std::invalid_argument("QuadraticToy: block length mismatch");
  }

  std::size_t n_;
};

}  // namespace lpam
