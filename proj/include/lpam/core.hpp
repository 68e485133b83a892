#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lpam {

using Vector = std::vector<double>;

/// Raised when an objective term or an update produces NaN/Inf.
class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

inline bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double squared_norm(std::span<const double> a) { return dot(a, a); }
inline double norm(std::span<const double> a) { return std::sqrt(squared_norm(a)); }

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("squared_distance: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline double distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

/// out = x - step * g
inline Vector axpy_step(std::span<const double> x, double step, std::span<const double> g) {
  if (x.size() != g.size()) throw std::invalid_argument("axpy_step: length mismatch");
  Vector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - step * g[i];
  return out;
}

inline Vector add(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("add: length mismatch");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

/// The iterate X = (x1, x2). Block lengths are fixed once constructed.
struct TwoBlockPoint {
  Vector x1;
  Vector x2;

  TwoBlockPoint() = default;
  TwoBlockPoint(Vector a, Vector b) : x1(std::move(a)), x2(std::move(b)) {}

  static TwoBlockPoint zeros(std::size_t n, std::size_t m) {
    return {Vector(n, 0.0), Vector(m, 0.0)};
  }

  bool finite() const { return all_finite(x1) && all_finite(x2); }
  bool same_shape(const TwoBlockPoint& o) const {
    return x1.size() == o.x1.size() && x2.size() == o.x2.size();
  }

  double squared_norm() const { return lpam::squared_norm(x1) + lpam::squared_norm(x2); }
  double norm() const { return std::sqrt(squared_norm()); }

  bool operator==(const TwoBlockPoint&) const = default;
};

inline double squared_distance(const TwoBlockPoint& a, const TwoBlockPoint& b) {
  return squared_distance(a.x1, b.x1) + squared_distance(a.x2, b.x2);
}

/// Contract for Φ_ε = H_{1,ε}(x1) + H_{2,ε}(x2) + H_ε(x1, x2).
///
/// Every member is a pure function of its arguments. `lipschitz(eps)` returns
/// L_ε, the sum of the Lipschitz constants of ∇H_{1,ε}, ∇H_{2,ε} and
/// ∇_{1,2}H_ε, when the objective can bound it. `m(eps)` is the nonnegative
/// function with m(0) = 0 for which Φ_ε + m(ε) is nondecreasing in ε.
template <class T>
concept SmoothedObjective = requires(const T& f, std::span<const double> x, double eps) {
  { f.size1() } -> std::convertible_to<std::size_t>;
  { f.size2() } -> std::convertible_to<std::size_t>;
  { f.h1(x, eps) } -> std::convertible_to<double>;
  { f.h2(x, eps) } -> std::convertible_to<double>;
  { f.h(x, x, eps) } -> std::convertible_to<double>;
  { f.grad_h1(x, eps) } -> std::same_as<Vector>;
  { f.grad_h2(x, eps) } -> std::same_as<Vector>;
  { f.grad1_h(x, x, eps) } -> std::same_as<Vector>;
  { f.grad2_h(x, x, eps) } -> std::same_as<Vector>;
  { f.lipschitz(eps) } -> std::same_as<std::optional<double>>;
  { f.m(eps) } -> std::convertible_to<double>;
};

namespace detail {

inline void require_positive_eps(double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("smoothing parameter must be > 0");
}

inline double checked(double v, const char* term) {
  if (!std::isfinite(v)) throw NumericError(std::string("non-finite value in ") + term);
  return v;
}

inline Vector checked(Vector v, const char* term) {
  if (!all_finite(v)) throw NumericError(std::string("non-finite gradient in ") + term);
  return v;
}

}  // namespace detail

template <SmoothedObjective Obj>
double phi_eps(const Obj& obj, const TwoBlockPoint& X, double eps) {
  detail::require_positive_eps(eps);
  const double a = detail::checked(obj.h1(X.x1, eps), "H1");
  const double b = detail::checked(obj.h2(X.x2, eps), "H2");
  const double c = detail::checked(obj.h(X.x1, X.x2, eps), "H");
  return detail::checked(a + b + c, "Phi");
}

/// ∂Φ_ε/∂x1 = ∇H_{1,ε}(x1) + ∇_1 H_ε(x1, x2)
template <SmoothedObjective Obj>
Vector grad1_phi_eps(const Obj& obj, std::span<const double> x1, std::span<const double> x2,
                     double eps) {
  detail::require_positive_eps(eps);
  return detail::checked(add(obj.grad_h1(x1, eps), obj.grad1_h(x1, x2, eps)), "grad_1 Phi");
}

template <SmoothedObjective Obj>
Vector grad2_phi_eps(const Obj& obj, std::span<const double> x1, std::span<const double> x2,
                     double eps) {
  detail::require_positive_eps(eps);
  return detail::checked(add(obj.grad_h2(x2, eps), obj.grad2_h(x1, x2, eps)), "grad_2 Phi");
}

template <SmoothedObjective Obj>
TwoBlockPoint grad_phi_eps(const Obj& obj, const TwoBlockPoint& X, double eps) {
  // Objectives whose coupling term shares work across blocks may expose grad_h.
  if constexpr (requires {
                  { obj.grad_h(X.x1, X.x2, eps) } -> std::same_as<TwoBlockPoint>;
                }) {
    detail::require_positive_eps(eps);
    TwoBlockPoint gh = obj.grad_h(X.x1, X.x2, eps);
    return {detail::checked(add(obj.grad_h1(X.x1, eps), gh.x1), "grad_1 Phi"),
            detail::checked(add(obj.grad_h2(X.x2, eps), gh.x2), "grad_2 Phi")};
  } else {
    return {grad1_phi_eps(obj, X.x1, X.x2, eps), grad2_phi_eps(obj, X.x1, X.x2, eps)};
  }
}

}  // namespace lpam
