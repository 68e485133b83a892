#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpam/core.hpp"

namespace lpam {

enum class UpdateOrder { separable_first, joint_first };
enum class SolverMode { lpam, bcd_only };
enum class Branch { u, v };
enum class ExitReason { tolerance_met, iteration_cap, numeric_error, line_search_failure };

inline std::string to_string(UpdateOrder o) {
  return o == UpdateOrder::separable_first ? "separable_first" : "joint_first";
}
inline std::string to_string(SolverMode m) { return m == SolverMode::lpam ? "lpam" : "bcd"; }
inline std::string to_string(Branch b) { return b == Branch::u ? "u" : "v"; }
inline std::string to_string(ExitReason r) {
  switch (r) {
    case ExitReason::tolerance_met: return "tolerance_met";
    case ExitReason::iteration_cap: return "iteration_cap";
    case ExitReason::numeric_error: return "numeric_error";
    case ExitReason::line_search_failure: return "line_search_failure";
  }
  return "unknown";
}

inline UpdateOrder parse_update_order(const std::string& s) {
  if (s == "separable_first") return UpdateOrder::separable_first;
  if (s == "joint_first") return UpdateOrder::joint_first;
  throw std::invalid_argument("unknown update order '" + s + "'");
}
inline SolverMode parse_solver_mode(const std::string& s) {
  if (s == "lpam") return SolverMode::lpam;
  if (s == "bcd" || s == "bcd_only") return SolverMode::bcd_only;
  throw std::invalid_argument("unknown solver mode '" + s + "'");
}

/// u-branch step sizes for one iteration: (α_k, τ_k, β_k, γ_k).
struct StepSizes {
  double alpha = 0.0;
  double tau = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

struct LpamConfig {
  double eps0 = 0.01;
  double gamma = 0.9;
  double eps_sigma = 60000.0;
  double eps_tol = 0.0;
  double a = 1e-4;
  double ls_delta = 1e-4;
  double rho = 0.5;
  double alpha_bar = 0.9;
  double beta_bar = 0.9;
  // Per-iteration schedules, indexed by k and clamped to the last entry.
  std::vector<double> step_alpha{0.5};
  std::vector<double> step_tau{2, 2, 2, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0.1};
  std::vector<double> step_beta{0.5};
  std::vector<double> step_gamma{2, 2, 2, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0.1};
  std::size_t max_iter = 1000;
  UpdateOrder order = UpdateOrder::separable_first;
  SolverMode mode = SolverMode::lpam;
  std::size_t ls_max = 60;

  StepSizes steps_at(std::size_t k) const {
    auto pick = [k](const std::vector<double>& s) { return s[std::min(k, s.size() - 1)]; };
    return {pick(step_alpha), pick(step_tau), pick(step_beta), pick(step_gamma)};
  }

  void validate() const {
    auto open_unit = [](double v) { return v > 0.0 && v < 1.0; };
    if (!(eps0 > 0.0)) throw std::invalid_argument("eps0 must be > 0");
    if (!open_unit(gamma)) throw std::invalid_argument("gamma must lie in (0, 1)");
    if (!(eps_sigma > 0.0)) throw std::invalid_argument("eps_sigma must be > 0");
    if (!(eps_tol >= 0.0)) throw std::invalid_argument("eps_tol must be >= 0");
    if (!(a > 0.0)) throw std::invalid_argument("a must be > 0");
    if (!open_unit(ls_delta)) throw std::invalid_argument("ls_delta must lie in (0, 1)");
    if (!open_unit(rho)) throw std::invalid_argument("rho must lie in (0, 1)");
    if (!open_unit(alpha_bar)) throw std::invalid_argument("alpha_bar must lie in (0, 1)");
    if (!open_unit(beta_bar)) throw std::invalid_argument("beta_bar must lie in (0, 1)");
    for (const auto* s : {&step_alpha, &step_tau, &step_beta, &step_gamma}) {
      if (s->empty()) throw std::invalid_argument("step schedules need at least one entry");
      for (double v : *s)
        if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("step sizes must be finite and >= 0");
    }
    if (ls_max == 0) throw std::invalid_argument("ls_max must be positive");
  }
};

struct IterateRecord {
  std::size_t k = 0;
  double eps = 0.0;
  double phi = 0.0;             // Φ_ε(Xᵏ)
  double grad_norm = 0.0;       // ‖∇Φ_ε(Xᵏ)‖
  Branch branch = Branch::v;
  std::size_t ls_count = 0;     // ℓ_k, 0 on the u-branch
  double decrease = 0.0;        // Φ_ε(Xᵏ) − Φ_ε(Xᵏ⁺¹)
  double phi_next = 0.0;        // Φ_ε(Xᵏ⁺¹), same ε
  double grad_norm_next = 0.0;  // ‖∇Φ_ε(Xᵏ⁺¹)‖, same ε
  bool reduced = false;         // ε reduced after this iteration

  bool operator==(const IterateRecord&) const = default;
};

struct ReductionEvent {
  std::size_t k = 0;
  double eps = 0.0;  // ε in force at iteration k, before the reduction
  TwoBlockPoint X;   // Xᵏ⁺¹
};

struct SolverState {
  TwoBlockPoint X;
  double eps = 0.0;
  std::size_t k = 0;
  std::vector<IterateRecord> trace;
  std::vector<ReductionEvent> events;
};

struct RunResult {
  SolverState state;
  ExitReason reason = ExitReason::iteration_cap;
  std::string message;
};

class LineSearchFailure : public std::runtime_error {
public:
  LineSearchFailure(const std::string& what, TwoBlockPoint last)
      : std::runtime_error(what), last_candidate(std::move(last)) {}
  TwoBlockPoint last_candidate;
};

/// Residual-PALM candidate. separable_first:
///   z1 = x1 − α∇H1(x1),  u1 = z1 − τ∇₁H(z1, x2),
///   z2 = x2 − β∇H2(x2),  u2 = z2 − γ∇₂H(u1, z2).
/// joint_first swaps the roles:
///   z1 = x1 − α∇₁H(x1, x2), u1 = z1 − τ∇H1(z1),
///   z2 = x2 − β∇₂H(u1, x2), u2 = z2 − γ∇H2(z2).
template <SmoothedObjective Obj>
TwoBlockPoint u_step(const Obj& obj, const TwoBlockPoint& X, double eps, const StepSizes& s,
                     UpdateOrder order = UpdateOrder::separable_first) {
  detail::require_positive_eps(eps);
  auto finite = [](Vector v, const char* what) { return detail::checked(std::move(v), what); };
  if (order == UpdateOrder::separable_first) {
    Vector z1 = finite(axpy_step(X.x1, s.alpha, obj.grad_h1(X.x1, eps)), "u-step z1");
    Vector u1 = finite(axpy_step(z1, s.tau, obj.grad1_h(z1, X.x2, eps)), "u-step u1");
    Vector z2 = finite(axpy_step(X.x2, s.beta, obj.grad_h2(X.x2, eps)), "u-step z2");
    Vector u2 = finite(axpy_step(z2, s.gamma, obj.grad2_h(u1, z2, eps)), "u-step u2");
    return {std::move(u1), std::move(u2)};
  }
  Vector z1 = finite(axpy_step(X.x1, s.alpha, obj.grad1_h(X.x1, X.x2, eps)), "u-step z1");
  Vector u1 = finite(axpy_step(z1, s.tau, obj.grad_h1(z1, eps)), "u-step u1");
  Vector z2 = finite(axpy_step(X.x2, s.beta, obj.grad2_h(u1, X.x2, eps)), "u-step z2");
  Vector u2 = finite(axpy_step(z2, s.gamma, obj.grad_h2(z2, eps)), "u-step u2");
  return {std::move(u1), std::move(u2)};
}

namespace detail {

// Both safeguard inequalities, given Φ_ε(X), ‖∇Φ_ε(X)‖ and Φ_ε(U).
inline bool safeguard_holds(const TwoBlockPoint& X, const TwoBlockPoint& U, double phi_x,
                            double grad_norm_x, double phi_u, double a) {
  const double d1 = distance(U.x1, X.x1);
  const double d2 = distance(U.x2, X.x2);
  const bool decrease = phi_u - phi_x <= -a * (d1 * d1 + d2 * d2);
  const bool bounded = grad_norm_x <= (d1 + d2) / a;
  return decrease && bounded;
}

}  // namespace detail

/// Φ_ε(U) − Φ_ε(X) ≤ −a‖U − X‖²  and  ‖∇Φ_ε(X)‖ ≤ (‖u1 − x1‖ + ‖u2 − x2‖)/a.
template <SmoothedObjective Obj>
bool safeguard_check(const Obj& obj, const TwoBlockPoint& X, const TwoBlockPoint& U, double eps,
                     double a) {
  if (!(a > 0.0)) throw std::invalid_argument("safeguard constant a must be > 0");
  return detail::safeguard_holds(X, U, phi_eps(obj, X, eps), grad_phi_eps(obj, X, eps).norm(),
                                 phi_eps(obj, U, eps), a);
}

struct LineSearchOptions {
  double alpha_bar = 0.9;
  double beta_bar = 0.9;
  double rho = 0.5;
  double ls_delta = 1e-4;
  std::size_t ls_max = 60;
};

struct VStepResult {
  TwoBlockPoint X;
  std::size_t ls_count = 0;
  double phi = 0.0;  // Φ_ε at the accepted point
};

namespace detail {

template <SmoothedObjective Obj>
VStepResult v_step(const Obj& obj, const TwoBlockPoint& X, double eps, double phi_x,
                   const Vector& grad1_x, const LineSearchOptions& o) {
  double ab = o.alpha_bar;
  double bb = o.beta_bar;
  TwoBlockPoint v;
  for (std::size_t ell = 0;; ++ell) {
    v.x1 = axpy_step(X.x1, ab, grad1_x);
    bool ok = false;
    double phi_v = std::numeric_limits<double>::infinity();
    // A trial that overflows is rejected like any other failed trial.
    try {
      v.x2 = axpy_step(X.x2, bb, grad2_phi_eps(obj, v.x1, X.x2, eps));
      if (v.finite()) {
        phi_v = phi_eps(obj, v, eps);
        ok = phi_v - phi_x <= -o.ls_delta * squared_distance(v, X);
      }
    } catch (const NumericError&) {
      ok = false;
    }
    if (ok) return {std::move(v), ell, phi_v};
    if (ell + 1 > o.ls_max)
      throw LineSearchFailure("line search exceeded " + std::to_string(o.ls_max) + " backtracks",
                              std::move(v));
    ab *= o.rho;
    bb *= o.rho;
  }
}

}  // namespace detail

/// BCD step with backtracking:
///   v1 = x1 − ᾱ∇₁Φ_ε(x1, x2),  v2 = x2 − β̄∇₂Φ_ε(v1, x2),
/// shrinking (ᾱ, β̄) by ρ until Φ_ε(V) − Φ_ε(X) ≤ −δ‖V − X‖².
/// Returns the accepted point and the number of shrinks ℓ_k.
template <SmoothedObjective Obj>
VStepResult v_step_with_linesearch(const Obj& obj, const TwoBlockPoint& X, double eps,
                                   const LineSearchOptions& o) {
  auto open_unit = [](double v) { return v > 0.0 && v < 1.0; };
  if (!open_unit(o.alpha_bar) || !open_unit(o.beta_bar) || !open_unit(o.rho) || !open_unit(o.ls_delta))
    throw std::invalid_argument("v-step parameters must lie in (0, 1)");
  return detail::v_step(obj, X, eps, phi_eps(obj, X, eps), grad1_phi_eps(obj, X.x1, X.x2, eps), o);
}

namespace detail {

template <SmoothedObjective Obj>
RunResult run(const Obj& obj, const TwoBlockPoint& X0, const LpamConfig& cfg) {
  cfg.validate();
  if (X0.x1.size() != obj.size1() || X0.x2.size() != obj.size2())
    throw std::invalid_argument("initial point does not match objective block sizes");
  if (!X0.finite()) throw std::invalid_argument("initial point has non-finite entries");

  RunResult out;
  SolverState& st = out.state;
  st.X = X0;
  st.eps = cfg.eps0;
  if (cfg.max_iter == 0) {
    out.reason = ExitReason::iteration_cap;
    return out;
  }

  const LineSearchOptions ls{cfg.alpha_bar, cfg.beta_bar, cfg.rho, cfg.ls_delta, cfg.ls_max};
  try {
    double phi_x = phi_eps(obj, st.X, st.eps);
    TwoBlockPoint grad_x = grad_phi_eps(obj, st.X, st.eps);
    for (;;) {
      IterateRecord rec;
      rec.k = st.k;
      rec.eps = st.eps;
      rec.phi = phi_x;
      rec.grad_norm = grad_x.norm();

      TwoBlockPoint next;
      double phi_next = 0.0;
      bool accepted_u = false;
      if (cfg.mode == SolverMode::lpam) {
        // A non-finite u-candidate counts as a failed safeguard.
        try {
          TwoBlockPoint U = u_step(obj, st.X, st.eps, cfg.steps_at(st.k), cfg.order);
          const double phi_u = phi_eps(obj, U, st.eps);
          if (safeguard_holds(st.X, U, phi_x, rec.grad_norm, phi_u, cfg.a)) {
            next = std::move(U);
            phi_next = phi_u;
            accepted_u = true;
          }
        } catch (const NumericError&) {
        }
      }
      if (accepted_u) {
        rec.branch = Branch::u;
        rec.ls_count = 0;
      } else {
        VStepResult v = v_step(obj, st.X, st.eps, phi_x, grad_x.x1, ls);
        rec.branch = Branch::v;
        rec.ls_count = v.ls_count;
        next = std::move(v.X);
        phi_next = v.phi;
      }

      TwoBlockPoint grad_next = grad_phi_eps(obj, next, st.eps);
      rec.phi_next = phi_next;
      rec.decrease = phi_x - phi_next;
      rec.grad_norm_next = grad_next.norm();
      rec.reduced = rec.grad_norm_next < cfg.eps_sigma * cfg.gamma * st.eps;

      const double eps_k = st.eps;
      st.X = std::move(next);
      st.trace.push_back(rec);
      ++st.k;
      if (rec.reduced) {
        st.events.push_back({rec.k, eps_k, st.X});
        st.eps = cfg.gamma * eps_k;
        if (!(st.eps > 0.0)) throw NumericError("smoothing parameter underflowed to zero");
        phi_x = phi_eps(obj, st.X, st.eps);
        grad_x = grad_phi_eps(obj, st.X, st.eps);
      } else {
        phi_x = phi_next;
        grad_x = std::move(grad_next);
      }

      if (cfg.eps_sigma * eps_k < cfg.eps_tol) {
        out.reason = ExitReason::tolerance_met;
        return out;
      }
      if (st.k >= cfg.max_iter) {
        out.reason = ExitReason::iteration_cap;
        return out;
      }
    }
  } catch (const NumericError& e) {
    out.reason = ExitReason::numeric_error;
    out.message = e.what();
  } catch (const LineSearchFailure& e) {
    out.reason = ExitReason::line_search_failure;
    out.message = e.what();
  }
  return out;
}

}  // namespace detail

/// Smoothing + residual-PALM / BCD-safeguard iteration with geometric ε
/// reduction. Runs the u-branch unless config.mode is bcd_only.
template <SmoothedObjective Obj>
RunResult lpam_run(const Obj& obj, const TwoBlockPoint& X0, const LpamConfig& config) {
  return detail::run(obj, X0, config);
}

/// The same iteration with the u-branch removed.
template <SmoothedObjective Obj>
RunResult bcd_run(const Obj& obj, const TwoBlockPoint& X0, LpamConfig config) {
  config.mode = SolverMode::bcd_only;
  return detail::run(obj, X0, config);
}

// Trace CSV ---------------------------------------------------------------

inline constexpr const char* kTraceHeader =
    "k,eps,phi,grad_norm,branch,ls_count,decrease,phi_next,grad_norm_next,reduced";

inline void write_trace_csv(std::ostream& os, const std::vector<IterateRecord>& trace) {
  os << kTraceHeader << '\n';
  std::ostringstream line;
  line << std::setprecision(17);
  for (const auto& r : trace) {
    line.str("");
    line << r.k << ',' << r.eps << ',' << r.phi << ',' << r.grad_norm << ',' << to_string(r.branch)
         << ',' << r.ls_count << ',' << r.decrease << ',' << r.phi_next << ',' << r.grad_norm_next
         << ',' << (r.reduced ? 1 : 0) << '\n';
    os << line.str();
  }
}

class TraceParseError : public std::runtime_error {
public:
  TraceParseError(std::size_t row, const std::string& what)
      : std::runtime_error("trace row " + std::to_string(row) + ": " + what), row(row) {}
  std::size_t row;
};

inline std::vector<IterateRecord> read_trace_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kTraceHeader)
    throw TraceParseError(0, "missing or unexpected header");
  std::vector<IterateRecord> out;
  std::size_t row = 0;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 10) throw TraceParseError(row, "expected 10 columns, got " + std::to_string(cells.size()));
    auto num = [&](std::size_t i) {
      const char* begin = cells[i].c_str();
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (cells[i].empty() || end != begin + cells[i].size() || !std::isfinite(v))
        throw TraceParseError(row, "column " + std::to_string(i) + " is not a finite number");
      return v;
    };
    auto count = [&](std::size_t i) {
      const double v = num(i);
      if (v < 0 || v != std::floor(v)) throw TraceParseError(row, "column " + std::to_string(i) + " is not a count");
      return std::size_t(v);
    };
    IterateRecord r;
    r.k = count(0);
    r.eps = num(1);
    r.phi = num(2);
    r.grad_norm = num(3);
    if (cells[4] == "u") r.branch = Branch::u;
    else if (cells[4] == "v") r.branch = Branch::v;
    else throw TraceParseError(row, "branch must be u or v");
    r.ls_count = count(5);
    r.decrease = num(6);
    r.phi_next = num(7);
    r.grad_norm_next = num(8);
    if (cells[9] != "0" && cells[9] != "1") throw TraceParseError(row, "reduced must be 0 or 1");
    r.reduced = cells[9] == "1";
    out.push_back(r);
  }
  return out;
}

}  // namespace lpam
