#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "lpam/core.hpp"
#include "lpam/solver.hpp"

namespace lpam {

/// Maps ε to L_ε, or nullopt when no bound is known.
using LipschitzFn = std::function<std::optional<double>(double)>;

/// Constants the convergence bounds depend on.
struct BoundParams {
  double a = 1e-4;
  double alpha_bar = 0.9;
  double beta_bar = 0.9;
  double ls_delta = 1e-4;
  double rho = 0.5;
  double eps_sigma = 60000.0;
  double gamma = 0.9;
  double eps0 = 0.01;
  double phi_x0 = 0.0;    // Φ(X⁰), unsmoothed
  double phi_star = 0.0;  // uniform lower bound of every Φ_ε

  static BoundParams from_config(const LpamConfig& c, double phi_x0, double phi_star = 0.0) {
    return {c.a, c.alpha_bar, c.beta_bar, c.ls_delta, c.rho, c.eps_sigma, c.gamma, c.eps0, phi_x0, phi_star};
  }
};

/// ℓ_max = ⌊log((L/2 + δ)·max(ᾱ, β̄)) / log(1/ρ)⌋ + 1, clamped below at 0.
inline long lmax_bound(double L, double ls_delta, double alpha_bar, double beta_bar, double rho) {
  if (!(L > 0.0) || !(ls_delta > 0.0) || !(alpha_bar > 0.0) || !(beta_bar > 0.0))
    throw std::invalid_argument("lmax_bound: inputs must be positive");
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("lmax_bound: rho must lie in (0, 1)");
  const double arg = (0.5 * L + ls_delta) * std::max(alpha_bar, beta_bar);
  const long v = long(std::floor(std::log(arg) / std::log(1.0 / rho))) + 1;
  return std::max(0L, v);
}

/// b₂ = max{2a⁻³, 4 max(ᾱ,β̄)² L² / (δ min(ᾱ,β̄)² ρ²)}; without L only the
/// u-branch term is known.
inline double gradient_decrease_constant(const BoundParams& p, std::optional<double> L) {
  const double u_term = 2.0 / (p.a * p.a * p.a);
  if (!L) return u_term;
  const double mx = std::max(p.alpha_bar, p.beta_bar);
  const double mn = std::min(p.alpha_bar, p.beta_bar);
  return std::max(u_term, 4.0 * mx * mx * (*L) * (*L) / (p.ls_delta * mn * mn * p.rho * p.rho));
}

/// (2a⁻³ + 4 max(ᾱ,β̄)² L² / (δ min(ᾱ,β̄)² ρ²)) · (Φ(X⁰) − Φ* + 1) / η²
inline double iteration_bound(double a, double alpha_bar, double beta_bar, double ls_delta,
                              double rho, double L, double phi_gap_plus_one, double eta) {
  const double mx = std::max(alpha_bar, beta_bar);
  const double mn = std::min(alpha_bar, beta_bar);
  const double c = 2.0 / (a * a * a) + 4.0 * mx * mx * L * L / (ls_delta * mn * mn * rho * rho);
  return c * phi_gap_plus_one / (eta * eta);
}

struct SegmentReport {
  std::size_t l = 0;
  long k_begin = -1;  // k_l (−1 for the first segment)
  long k_end = 0;     // k_{l+1}
  double eps = 0.0;   // ε in force during the segment
  std::size_t observed = 0;
  std::optional<double> bound;  // empty when L_ε is unknown

  bool within_bound() const { return !bound || double(observed) <= *bound; }
};

/// One report per completed segment, i.e. per recorded reduction event.
inline std::vector<SegmentReport> segment_bound(const std::vector<IterateRecord>& trace,
                                                const LipschitzFn& lipschitz, const BoundParams& p) {
  std::vector<SegmentReport> out;
  long prev = -1;
  for (const auto& r : trace) {
    if (!r.reduced) continue;
    SegmentReport s;
    s.l = out.size();
    s.k_begin = prev;
    s.k_end = long(r.k);
    s.eps = r.eps;
    s.observed = std::size_t(s.k_end - s.k_begin);
    const double eta = p.eps_sigma * p.eps0 * std::pow(p.gamma, double(s.l + 1));
    if (auto L = lipschitz ? lipschitz(r.eps) : std::nullopt) {
      s.bound = iteration_bound(p.a, p.alpha_bar, p.beta_bar, p.ls_delta, p.rho, *L,
                                p.phi_x0 - p.phi_star + 1.0, eta);
    }
    out.push_back(s);
    prev = long(r.k);
  }
  return out;
}

struct AuditFinding {
  std::size_t k = 0;
  double lhs = 0.0;  // measured side
  double rhs = 0.0;  // allowed side
};

struct AuditResult {
  bool passed = true;
  std::size_t checked = 0;
  std::vector<AuditFinding> violations;
};

/// ‖∇Φ_ε(Xᵏ)‖² ≤ b₂ (Φ_ε(Xᵏ) − Φ_ε(Xᵏ⁺¹)) + 1e-9 for every step. v-steps are
/// skipped when L_ε is unavailable.
inline AuditResult decrease_audit(const std::vector<IterateRecord>& trace,
                                  const LipschitzFn& lipschitz, const BoundParams& p) {
  AuditResult res;
  for (const auto& r : trace) {
    const auto L = lipschitz ? lipschitz(r.eps) : std::nullopt;
    if (r.branch == Branch::v && !L) continue;
    ++res.checked;
    const double lhs = r.grad_norm * r.grad_norm;
    const double rhs = gradient_decrease_constant(p, L) * r.decrease + 1e-9;
    if (!(lhs <= rhs)) {
      res.passed = false;
      res.violations.push_back({r.k, lhs, rhs});
    }
  }
  return res;
}

/// Every v-step backtrack count within ℓ_max(L_ε).
inline AuditResult lmax_audit(const std::vector<IterateRecord>& trace, const LipschitzFn& lipschitz,
                              const BoundParams& p) {
  AuditResult res;
  for (const auto& r : trace) {
    if (r.branch != Branch::v) continue;
    const auto L = lipschitz ? lipschitz(r.eps) : std::nullopt;
    if (!L) continue;
    ++res.checked;
    const long bound = lmax_bound(*L, p.ls_delta, p.alpha_bar, p.beta_bar, p.rho);
    if (long(r.ls_count) > bound) {
      res.passed = false;
      res.violations.push_back({r.k, double(r.ls_count), double(bound)});
    }
  }
  return res;
}

/// Φ_ε(Xᵏ⁺¹) < Φ_ε(Xᵏ) on every step that moved off a non-stationary point.
inline AuditResult strict_decrease_audit(const std::vector<IterateRecord>& trace) {
  AuditResult res;
  for (const auto& r : trace) {
    ++res.checked;
    const bool ok = r.grad_norm > 0.0 ? r.decrease > 0.0 : r.decrease >= 0.0;
    if (!ok) {
      res.passed = false;
      res.violations.push_back({r.k, r.phi_next, r.phi});
    }
  }
  return res;
}

// Image quality ------------------------------------------------------------

struct MetricsOptions {
  bool squared_peak = false;  // conventional PSNR with MAX² in the numerator
  double k1 = 0.01;
  double k2 = 0.03;
};

struct MetricsReport {
  double mse = 0.0;
  double psnr = 0.0;  // +inf when the images are identical
  double ssim = 0.0;
  double nmse = 0.0;
  double rmse = 0.0;
};

/// SSIM from whole-image statistics with dynamic range L.
inline double global_ssim(std::span<const double> x, std::span<const double> y, double range, double k1,
                          double k2) {
  if (x.size() != y.size() || x.empty()) throw std::invalid_argument("ssim: shape mismatch");
  const double n = double(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double vx = 0.0, vy = 0.0, cxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    vx += dx * dx;
    vy += dy * dy;
    cxy += dx * dy;
  }
  vx /= n;
  vy /= n;
  cxy /= n;
  const double c1 = (k1 * range) * (k1 * range);
  const double c2 = (k2 * range) * (k2 * range);
  return ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
}

/// L = dynamic range of the ground truth y (1 if y is flat).
inline double global_ssim(std::span<const double> x, std::span<const double> y, double k1 = 0.01,
                          double k2 = 0.03) {
  if (y.empty()) throw std::invalid_argument("ssim: shape mismatch");
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  return global_ssim(x, y, *hi - *lo > 0.0 ? *hi - *lo : 1.0, k1, k2);
}

/// x is the reconstruction, y the ground truth.
inline MetricsReport metrics(std::span<const double> x, std::span<const double> y,
                             const MetricsOptions& opt = {}) {
  if (x.size() != y.size() || x.empty()) throw std::invalid_argument("metrics: shape mismatch");
  const double ynorm2 = squared_norm(y);
  if (ynorm2 == 0.0) throw std::invalid_argument("metrics: ground truth is all zero (NMSE undefined)");
  MetricsReport r;
  const double err2 = squared_distance(x, y);
  r.mse = err2 / double(x.size());
  r.rmse = std::sqrt(r.mse);
  r.nmse = err2 / ynorm2;
  const double peak = *std::max_element(y.begin(), y.end());
  if (r.mse == 0.0) {
    r.psnr = std::numeric_limits<double>::infinity();
  } else if (peak <= 0.0) {
    r.psnr = std::numeric_limits<double>::quiet_NaN();
  } else {
    r.psnr = 10.0 * std::log10((opt.squared_peak ? peak * peak : peak) / r.mse);
  }
  r.ssim = global_ssim(x, y, opt.k1, opt.k2);
  return r;
}

}  // namespace lpam
