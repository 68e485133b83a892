#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "lpam/core.hpp"

namespace lpam {

/// Feature matrix of shape (num_groups, group_dim), row-major. Row i is g_i(X).
class GroupedFeatures {
public:
  GroupedFeatures() = default;
  GroupedFeatures(std::size_t num_groups, std::size_t group_dim)
      : n_(num_groups), d_(group_dim), values_(num_groups * group_dim, 0.0) {}
  GroupedFeatures(std::size_t num_groups, std::size_t group_dim, Vector values)
      : n_(num_groups), d_(group_dim), values_(std::move(values)) {
    if (values_.size() != n_ * d_)
      throw std::invalid_argument("GroupedFeatures: value count does not match shape");
  }

  std::size_t num_groups() const { return n_; }
  std::size_t group_dim() const { return d_; }

  std::span<const double> group(std::size_t i) const { return {values_.data() + i * d_, d_}; }
  std::span<double> group(std::size_t i) { return {values_.data() + i * d_, d_}; }
  double group_norm(std::size_t i) const { return norm(group(i)); }

  const Vector& values() const { return values_; }
  Vector& values() { return values_; }

private:
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  Vector values_;
};

/// Index split at a given ε: I0 holds groups with ‖g_i‖ ≤ ε, I1 the rest.
struct SmoothingState {
  double eps = 0.0;
  std::vector<std::size_t> quadratic;  // I0
  std::vector<std::size_t> linear;     // I1
};

inline SmoothingState partition_groups(const GroupedFeatures& f, double eps) {
  detail::require_positive_eps(eps);
  SmoothingState s{eps, {}, {}};
  for (std::size_t i = 0; i < f.num_groups(); ++i) {
    (f.group_norm(i) <= eps ? s.quadratic : s.linear).push_back(i);
  }
  return s;
}

/// Per-group smoothed norm: t²/(2ε) for t ≤ ε, t − ε/2 otherwise.
inline double smoothed_group_norm(double t, double eps) {
  return t <= eps ? t * t / (2.0 * eps) : t - 0.5 * eps;
}

/// r_ε = Σ_{I0} ‖g_i‖²/(2ε) + Σ_{I1} (‖g_i‖ − ε/2)
inline double r_eps(const GroupedFeatures& f, double eps) {
  detail::require_positive_eps(eps);
  double s = 0.0;
  for (std::size_t i = 0; i < f.num_groups(); ++i) s += smoothed_group_norm(f.group_norm(i), eps);
  return s;
}

/// Unsmoothed ℓ2,1 norm Σ ‖g_i‖.
inline double l21_norm(const GroupedFeatures& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.num_groups(); ++i) s += f.group_norm(i);
  return s;
}

/// Per-group weights s_i = ∂r_ε/∂g_i: g_i/ε on I0 and g_i/‖g_i‖ on I1.
inline GroupedFeatures r_eps_weights(const GroupedFeatures& f, double eps) {
  detail::require_positive_eps(eps);
  GroupedFeatures w(f.num_groups(), f.group_dim());
  for (std::size_t i = 0; i < f.num_groups(); ++i) {
    const auto g = f.group(i);
    const double t = norm(g);
    const double scale = t <= eps ? 1.0 / eps : 1.0 / t;
    auto out = w.group(i);
    for (std::size_t j = 0; j < g.size(); ++j) out[j] = g[j] * scale;
  }
  return w;
}

/// w ↦ ∇_{1,2}g(X)ᵀ w for stacked group weights.
using VjpFn = std::function<TwoBlockPoint(const GroupedFeatures&)>;

/// ∇_{1,2} r_ε(X) = ∇g(X)ᵀ s with s from r_eps_weights.
inline TwoBlockPoint grad_r_eps(const GroupedFeatures& f, const VjpFn& vjp, double eps) {
  return vjp(r_eps_weights(f, eps));
}

/// m(ε) = slope · ε. For λ·r_ε over n groups the tight slope is λn/2.
struct LinearMFunction {
  double slope = 0.0;
  double operator()(double eps) const { return slope * eps; }
};

/// Φ_ε(X) + m(ε) ≤ Φ_δ(X) + m(δ), with 1e-12 relative slack.
template <SmoothedObjective Obj, class MFn>
bool check_c3(const Obj& obj, const MFn& m, const TwoBlockPoint& X, double eps, double delta) {
  if (!(eps > 0.0) || !(eps <= delta))
    throw std::invalid_argument("check_c3: requires 0 < eps <= delta");
  const double lhs = phi_eps(obj, X, eps) + m(eps);
  const double rhs = phi_eps(obj, X, delta) + m(delta);
  return lhs <= rhs + 1e-12 * std::max(1.0, std::abs(rhs));
}

/// True iff the r_ε gradient weights coincide (to 1e-12) at ε1 and ε2. When
/// every group sits strictly outside both balls the weights are ε-free, so any
/// group inside a ball makes the comparison fail.
inline bool check_c4_stable_branch(const GroupedFeatures& f, double eps1, double eps2) {
  if (!(eps1 > 0.0) || !(eps2 > 0.0))
    throw std::invalid_argument("check_c4_stable_branch: eps must be > 0");
  const auto a = r_eps_weights(f, eps1);
  const auto b = r_eps_weights(f, eps2);
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    if (std::abs(a.values()[i] - b.values()[i]) > 1e-12) return false;
  }
  return true;
}

/// Same comparison carried through the Jacobian transpose.
inline bool check_c4_stable_branch(const GroupedFeatures& f, const VjpFn& vjp, double eps1,
                                   double eps2) {
  if (!(eps1 > 0.0) || !(eps2 > 0.0))
    throw std::invalid_argument("check_c4_stable_branch: eps must be > 0");
  const auto a = grad_r_eps(f, vjp, eps1);
  const auto b = grad_r_eps(f, vjp, eps2);
  const double scale = std::max(1.0, std::sqrt(std::max(a.squared_norm(), b.squared_norm())));
  return std::sqrt(squared_distance(a, b)) <= 1e-12 * scale;
}

}  // namespace lpam
