#include <gtest/gtest.h>

#include <limits>
#include <sstream>

#include "support.hpp"

using namespace lpam;

namespace {

// Φ = c·x1 in one dimension, with constant gradient norm |c|.
struct LinearSlope {
  double c = 0.5;
  std::size_t size1() const { return 1; }
  std::size_t size2() const { return 1; }
  double h1(std::span<const double> x, double) const { return c * x[0]; }
  double h2(std::span<const double>, double) const { return 0.0; }
  double h(std::span<const double>, std::span<const double>, double) const { return 0.0; }
  Vector grad_h1(std::span<const double>, double) const { return {c}; }
  Vector grad_h2(std::span<const double>, double) const { return {0.0}; }
  Vector grad1_h(std::span<const double>, std::span<const double>, double) const { return {0.0}; }
  Vector grad2_h(std::span<const double>, std::span<const double>, double) const { return {0.0}; }
  std::optional<double> lipschitz(double) const { return 1.0; }
  double m(double) const { return 0.0; }
};

// Quadratic with a gradient of the wrong sign: no step ever decreases Φ.
struct WrongGradient : QuadraticToy {
  using QuadraticToy::QuadraticToy;
  Vector grad_h1(std::span<const double> x, double e) const {
    auto g = QuadraticToy::grad_h1(x, e);
    for (auto& v : g) v = -v;
    return g;
  }
  Vector grad_h2(std::span<const double> x, double e) const {
    auto g = QuadraticToy::grad_h2(x, e);
    for (auto& v : g) v = -v;
    return g;
  }
  Vector grad1_h(std::span<const double> a, std::span<const double> b, double e) const {
    auto g = QuadraticToy::grad1_h(a, b, e);
    for (auto& v : g) v = -v;
    return g;
  }
  Vector grad2_h(std::span<const double> a, std::span<const double> b, double e) const {
    auto g = QuadraticToy::grad2_h(a, b, e);
    for (auto& v : g) v = -v;
    return g;
  }
};

struct NanGradient : QuadraticToy {
  NanGradient() : QuadraticToy(1) {}
  Vector grad_h1(std::span<const double>, double) const { return {std::numeric_limits<double>::quiet_NaN()}; }
};

LpamConfig quadratic_config() {
  LpamConfig c;
  c.eps0 = 1.0;
  c.eps_sigma = 1.0;
  c.max_iter = 5000;
  return c;
}

}  // namespace

TEST(UStep, ZeroStepsReturnX) {
  QuadraticToy q(3);
  std::mt19937_64 rng(1);
  const auto X = fixtures::random_point(3, 3, rng);
  EXPECT_EQ(u_step(q, X, 0.1, StepSizes{}), X);
  EXPECT_EQ(u_step(q, X, 0.1, StepSizes{}, UpdateOrder::joint_first), X);
}

TEST(UStep, SeparableFirstHandValue) {
  QuadraticToy q;
  const auto U = u_step(q, TwoBlockPoint{{1.0}, {1.0}}, 0.1, StepSizes{0.5, 0.5, 0.5, 0.5});
  EXPECT_DOUBLE_EQ(U.x1[0], 0.75);
  EXPECT_DOUBLE_EQ(U.x2[0], 0.625);
}

TEST(UStep, JointFirstHandValue) {
  // z1 = 1, u1 = 0.5, z2 = 1 − 0.5(1 − 0.5) = 0.75, u2 = 0.375
  QuadraticToy q;
  const auto U = u_step(q, TwoBlockPoint{{1.0}, {1.0}}, 0.1, StepSizes{0.5, 0.5, 0.5, 0.5}, UpdateOrder::joint_first);
  EXPECT_DOUBLE_EQ(U.x1[0], 0.5);
  EXPECT_DOUBLE_EQ(U.x2[0], 0.375);
}

TEST(UStep, JointRecoveryMatchesScriptedEvaluation) {
  const auto inst = fixtures::small_instance(6, 6, 3);
  const auto obj = make_joint_recovery(inst, FeatureExtractor::random(2, 4, 0.01, 5), 0.2);
  std::mt19937_64 rng(2);
  const auto X = fixtures::random_point(36, 36, rng, 0.5);
  const double eps = 0.05;
  const StepSizes s{0.4, 0.3, 0.6, 0.2};
  // Each partial gradient by central differences of the scalar terms.
  auto fd1 = [&](auto&& f, const Vector& at) {
    return fd_gradient([&](const TwoBlockPoint& Y) { return f(Y.x1); }, TwoBlockPoint{at, {}}).x1;
  };
  const Vector z1 = axpy_step(X.x1, s.alpha, fd1([&](const Vector& v) { return obj.h1(v, eps); }, X.x1));
  const Vector u1 = axpy_step(z1, s.tau, fd1([&](const Vector& v) { return obj.h(v, X.x2, eps); }, z1));
  const Vector z2 = axpy_step(X.x2, s.beta, fd1([&](const Vector& v) { return obj.h2(v, eps); }, X.x2));
  const Vector u2 = axpy_step(z2, s.gamma, fd1([&](const Vector& v) { return obj.h(u1, v, eps); }, z2));
  const auto U = u_step(obj, X, eps, s);
  EXPECT_LT(relative_error(U, TwoBlockPoint{u1, u2}), 1e-8);
}

TEST(Safeguard, DegenerateCandidateFailsAwayFromStationarity) {
  QuadraticToy q;
  const TwoBlockPoint X{{1.0}, {0.5}};
  EXPECT_FALSE(safeguard_check(q, X, X, 0.1, 1e-4));
}

TEST(Safeguard, DegenerateCandidateHoldsAtStationaryPoint) {
  QuadraticToy q(2);
  const auto Z = TwoBlockPoint::zeros(2, 2);
  EXPECT_TRUE(safeguard_check(q, Z, Z, 0.1, 1e-4));
}

TEST(Safeguard, GenuineDescentStepAccepted) {
  QuadraticToy q(3);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const auto X = fixtures::random_point(3, 3, rng);
    const auto g = grad_phi_eps(q, X, 0.1);
    const TwoBlockPoint U{axpy_step(X.x1, 0.2, g.x1), axpy_step(X.x2, 0.2, g.x2)};
    EXPECT_TRUE(safeguard_check(q, X, U, 0.1, 1e-3));
  }
  EXPECT_THROW(safeguard_check(q, TwoBlockPoint::zeros(3, 3), TwoBlockPoint::zeros(3, 3), 0.1, 0.0),
               std::invalid_argument);
}

TEST(VStep, StationaryPointStaysPut) {
  QuadraticToy q(2);
  const auto Z = TwoBlockPoint::zeros(2, 2);
  const auto r = v_step_with_linesearch(q, Z, 0.1, LineSearchOptions{});
  EXPECT_EQ(r.X, Z);
  EXPECT_EQ(r.ls_count, 0u);
}

TEST(VStep, BacktracksWithinLmaxBound) {
  QuadraticToy q(4);
  std::mt19937_64 rng(4);
  const LineSearchOptions o{0.9, 0.9, 0.5, 0.1, 60};
  // (2/2 + 0.1)·0.9 = 0.99 < 1, so the bound with L = 2 is 0; the toy exports L = 4.
  EXPECT_EQ(lmax_bound(2.0, 0.1, 0.9, 0.9, 0.5), 0);
  EXPECT_EQ(lmax_bound(4.0, 0.1, 0.9, 0.9, 0.5), 1);
  const long bound = lmax_bound(*q.lipschitz(1.0), 0.1, 0.9, 0.9, 0.5);
  for (int t = 0; t < 50; ++t) {
    const auto X = fixtures::random_point(4, 4, rng);
    const auto r = v_step_with_linesearch(q, X, 1.0, o);
    EXPECT_LE(long(r.ls_count), bound);
    EXPECT_LE(r.phi - phi_eps(q, X, 1.0), -0.1 * squared_distance(r.X, X) + 1e-15);
  }
}

TEST(VStep, SmallInitialStepsAcceptedFirstTry) {
  QuadraticToy q(4);
  std::mt19937_64 rng(5);
  // 1/(L/2 + δ) with L = 4, δ = 0.1 is 1/2.1.
  const LineSearchOptions o{0.45, 0.45, 0.5, 0.1, 60};
  for (int t = 0; t < 50; ++t) {
    const auto r = v_step_with_linesearch(q, fixtures::random_point(4, 4, rng), 1.0, o);
    EXPECT_EQ(r.ls_count, 0u);
  }
}

TEST(VStep, HardCapRaisesWithLastCandidate) {
  WrongGradient q(2);
  const TwoBlockPoint X{{1.0, 2.0}, {0.5, -1.0}};
  try {
    v_step_with_linesearch(q, X, 1.0, LineSearchOptions{0.9, 0.9, 0.5, 1e-4, 10});
    FAIL() << "expected LineSearchFailure";
  } catch (const LineSearchFailure& e) {
    EXPECT_TRUE(e.last_candidate.same_shape(X));
    EXPECT_LT(std::sqrt(squared_distance(e.last_candidate, X)), 1e-2);
  }
  EXPECT_THROW(v_step_with_linesearch(q, X, 1.0, LineSearchOptions{1.0, 0.9, 0.5, 1e-4, 10}),
               std::invalid_argument);
}

TEST(Run, ZeroIterationsReturnsStart) {
  QuadraticToy q(2);
  auto cfg = quadratic_config();
  cfg.max_iter = 0;
  const TwoBlockPoint X0{{1.0, 2.0}, {3.0, 4.0}};
  const auto r = lpam_run(q, X0, cfg);
  EXPECT_EQ(r.reason, ExitReason::iteration_cap);
  EXPECT_EQ(r.state.X, X0);
  EXPECT_TRUE(r.state.trace.empty());
}

TEST(Run, QuadraticConvergesWithOneReduction) {
  QuadraticToy q(3);
  LpamConfig cfg;
  cfg.eps0 = 1e-6;
  cfg.eps_sigma = 1.0;
  cfg.eps_tol = 1e-6;  // above σγε₀, so the first reduction ends the run
  cfg.max_iter = 10000;
  std::mt19937_64 rng(6);
  for (auto mode : {SolverMode::lpam, SolverMode::bcd_only}) {
    cfg.mode = mode;
    const auto r = lpam_run(q, fixtures::random_point(3, 3, rng), cfg);
    EXPECT_EQ(r.reason, ExitReason::tolerance_met);
    // The run stops one iteration after the first reduction, which may reduce again.
    EXPECT_GE(r.state.events.size(), 1u);
    EXPECT_LE(r.state.events.size(), 2u);
    EXPECT_LT(r.state.X.norm(), 1e-6);
  }
}

TEST(Run, BcdNeverTakesTheUBranch) {
  QuadraticToy q(3);
  auto cfg = quadratic_config();
  cfg.max_iter = 200;
  std::mt19937_64 rng(7);
  const auto X0 = fixtures::random_point(3, 3, rng);
  const auto b = bcd_run(q, X0, cfg);
  for (const auto& r : b.state.trace) EXPECT_EQ(r.branch, Branch::v);
  const auto l = lpam_run(q, X0, cfg);
  bool any_u = false;
  for (const auto& r : l.state.trace) any_u = any_u || r.branch == Branch::u;
  ASSERT_TRUE(any_u);
  EXPECT_NE(l.state.trace, b.state.trace);
  EXPECT_LT(b.state.X.norm(), 1e-6);
}

TEST(Run, TraceInvariants) {
  const auto inst = fixtures::small_instance(8, 8, 4, 0.4, MaskKind::radial);
  const auto obj = make_joint_recovery(inst, FeatureExtractor::identity(), 0.05);
  LpamConfig cfg;
  cfg.eps_sigma = 1.0;
  cfg.max_iter = 150;
  for (auto mode : {SolverMode::lpam, SolverMode::bcd_only}) {
    cfg.mode = mode;
    const auto r = lpam_run(obj, obj.zero_filled(), cfg);
    ASSERT_EQ(r.reason, ExitReason::iteration_cap);
    ASSERT_EQ(r.state.trace.size(), r.state.k);
    ASSERT_FALSE(r.state.events.empty());
    double prev_eps = cfg.eps0;
    for (std::size_t i = 0; i < r.state.trace.size(); ++i) {
      const auto& t = r.state.trace[i];
      EXPECT_LE(t.eps, prev_eps);
      prev_eps = t.eps;
      EXPECT_GT(t.decrease, 0.0) << "k=" << t.k;
      if (t.reduced) {
        EXPECT_LT(t.grad_norm_next, cfg.eps_sigma * cfg.gamma * t.eps);
      }
      if (i + 1 < r.state.trace.size()) {
        // Φ_{ε_k}(Xᵏ) + m(ε_k) never increases across iterations.
        const auto& n = r.state.trace[i + 1];
        EXPECT_LE(n.phi + obj.m(n.eps), t.phi + obj.m(t.eps) + 1e-12);
      }
    }
  }
}

TEST(Run, ReductionNeedsStrictInequality) {
  LinearSlope f;  // ‖∇Φ‖ = 0.5 everywhere
  LpamConfig cfg;
  cfg.eps0 = 1.0;
  cfg.gamma = 0.5;
  cfg.eps_sigma = 1.0;  // threshold σγε₀ = 0.5, a tie
  cfg.max_iter = 3;
  cfg.mode = SolverMode::bcd_only;
  const TwoBlockPoint X0{{0.0}, {0.0}};
  EXPECT_TRUE(lpam_run(f, X0, cfg).state.events.empty());
  cfg.eps_sigma = 1.0 + 1e-12;
  EXPECT_EQ(lpam_run(f, X0, cfg).state.events.size(), 1u);
}

TEST(Run, JointFirstOrderConverges) {
  QuadraticToy q(2);
  auto cfg = quadratic_config();
  cfg.order = UpdateOrder::joint_first;
  cfg.eps_tol = 1e-8;
  const auto r = lpam_run(q, TwoBlockPoint{{1.0, -1.0}, {2.0, 0.5}}, cfg);
  EXPECT_EQ(r.reason, ExitReason::tolerance_met);
  EXPECT_LT(r.state.X.norm(), 1e-6);
}

TEST(Run, FailuresBecomeExitReasons) {
  auto cfg = quadratic_config();
  cfg.ls_max = 5;
  const auto ls = lpam_run(WrongGradient(1), TwoBlockPoint{{1.0}, {2.0}}, cfg);
  EXPECT_EQ(ls.reason, ExitReason::line_search_failure);
  const auto nan = lpam_run(NanGradient{}, TwoBlockPoint{{1.0}, {2.0}}, cfg);
  EXPECT_EQ(nan.reason, ExitReason::numeric_error);
  EXPECT_FALSE(nan.message.empty());
}

TEST(Run, InvalidInputsRejected) {
  QuadraticToy q(2);
  LpamConfig cfg;
  EXPECT_THROW(lpam_run(q, TwoBlockPoint::zeros(1, 2), cfg), std::invalid_argument);
  EXPECT_THROW(lpam_run(q, TwoBlockPoint{{1.0, std::nan("")}, {0.0, 0.0}}, cfg), std::invalid_argument);
  cfg.gamma = 1.0;
  EXPECT_THROW(lpam_run(q, TwoBlockPoint::zeros(2, 2), cfg), std::invalid_argument);
  cfg = LpamConfig{};
  cfg.step_tau.clear();
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Run, ScheduleIndexIsClamped) {
  LpamConfig cfg;
  cfg.step_tau = {2.0, 1.0};
  EXPECT_EQ(cfg.steps_at(0).tau, 2.0);
  EXPECT_EQ(cfg.steps_at(1).tau, 1.0);
  EXPECT_EQ(cfg.steps_at(500).tau, 1.0);
}

TEST(Run, Deterministic) {
  const auto inst = fixtures::small_instance(8, 8, 5);
  const auto obj = make_joint_recovery(inst, FeatureExtractor::random(2, 3, 0.01, 1), 0.05);
  LpamConfig cfg;
  cfg.eps_sigma = 1.0;
  cfg.max_iter = 40;
  const auto a = lpam_run(obj, obj.zero_filled(), cfg);
  const auto b = lpam_run(obj, obj.zero_filled(), cfg);
  EXPECT_EQ(a.state.trace, b.state.trace);
  EXPECT_EQ(a.state.X, b.state.X);
}

TEST(TraceCsv, RoundTripIsExact) {
  QuadraticToy q(3);
  auto cfg = quadratic_config();
  cfg.eps_tol = 1e-9;
  const auto r = lpam_run(q, TwoBlockPoint{{1.0, 2.0, 3.0}, {-1.0, 0.0, 5.0}}, cfg);
  std::stringstream ss;
  write_trace_csv(ss, r.state.trace);
  EXPECT_EQ(read_trace_csv(ss), r.state.trace);
}

TEST(TraceCsv, SubnormalValuesSurvive) {
  IterateRecord rec;
  rec.decrease = 4.9e-324;
  rec.grad_norm = 2.2e-310;
  std::stringstream ss;
  write_trace_csv(ss, {rec});
  EXPECT_EQ(read_trace_csv(ss), std::vector<IterateRecord>{rec});
}

TEST(TraceCsv, MalformedRowsNamed) {
  const std::string head = std::string(kTraceHeader) + "\n";
  const std::string good = "0,0.01,1,1,v,0,0.5,0.5,0.5,0\n";
  auto row_of = [](const std::string& text) -> long {
    std::stringstream ss(text);
    try {
      read_trace_csv(ss);
    } catch (const TraceParseError& e) {
      return long(e.row);
    }
    return -1;
  };
  EXPECT_EQ(row_of(head + good + good + "2,0.01,abc,1,v,0,0.5,0.5,0.5,0\n"), 3);
  EXPECT_EQ(row_of(head + good + "1,0.01,1,1,w,0,0.5,0.5,0.5,0\n"), 2);
  EXPECT_EQ(row_of(head + "0,0.01,1,1,v,0,0.5\n"), 1);
  EXPECT_EQ(row_of(head + "0,0.01,1,1,v,1.5,0.5,0.5,0.5,0\n"), 1);
  EXPECT_EQ(row_of("k,eps\n" + good), 0);
  EXPECT_EQ(row_of(head + good), -1);
}
