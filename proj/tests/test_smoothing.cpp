#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace lpam;

namespace {

GroupedFeatures single(std::initializer_list<double> g) {
  GroupedFeatures f(1, g.size(), Vector(g));
  return f;
}

// vjp of the identity map X ↦ X viewed as 2n groups of dimension 1.
VjpFn scalar_identity_vjp(std::size_t n) {
  return [n](const GroupedFeatures& w) {
    return TwoBlockPoint{Vector(w.values().begin(), w.values().begin() + long(n)),
                         Vector(w.values().begin() + long(n), w.values().end())};
  };
}

GroupedFeatures scalar_groups(const TwoBlockPoint& X) {
  Vector v = X.x1;
  v.insert(v.end(), X.x2.begin(), X.x2.end());
  return GroupedFeatures(v.size(), 1, v);
}

}  // namespace

TEST(Smoothing, QuadraticBranchHandValue) { EXPECT_DOUBLE_EQ(r_eps(single({0.6, 0.8}), 2.0), 0.25); }

TEST(Smoothing, LinearBranchHandValue) { EXPECT_DOUBLE_EQ(r_eps(single({3.0, 4.0}), 1.0), 4.5); }

TEST(Smoothing, ZeroFeaturesGiveZero) {
  GroupedFeatures f(7, 3);
  for (double eps : {1e-6, 0.1, 5.0}) EXPECT_EQ(r_eps(f, eps), 0.0);
}

TEST(Smoothing, TieGoesToQuadraticSet) {
  GroupedFeatures f(2, 2, {0.6, 0.8, 3.0, 4.0});
  const auto s = partition_groups(f, 1.0);
  EXPECT_EQ(s.quadratic, (std::vector<std::size_t>{0}));
  EXPECT_EQ(s.linear, (std::vector<std::size_t>{1}));
  EXPECT_DOUBLE_EQ(smoothed_group_norm(1.0, 1.0), 0.5);
}

TEST(Smoothing, PartitionCoversEveryGroupOnce) {
  std::mt19937_64 rng(2);
  GroupedFeatures f(50, 3, fixtures::random_vector(150, rng));
  const auto s = partition_groups(f, 1.2);
  std::vector<int> seen(50, 0);
  for (auto i : s.quadratic) ++seen[i];
  for (auto i : s.linear) ++seen[i];
  for (int c : seen) EXPECT_EQ(c, 1);
}

TEST(Smoothing, BracketsTheUnsmoothedNorm) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 200; ++t) {
    GroupedFeatures f(20, 2, fixtures::random_vector(40, rng, 0.5));
    const double eps = std::exp(std::uniform_real_distribution<double>(-6.0, 1.0)(rng));
    const double r = l21_norm(f);
    const double re = r_eps(f, eps);
    EXPECT_LE(re, r + 1e-12);
    EXPECT_GE(re, r - 20 * eps / 2 - 1e-12);
  }
}

TEST(Smoothing, WeightsHaveNormAtMostOne) {
  std::mt19937_64 rng(5);
  GroupedFeatures f(40, 3, fixtures::random_vector(120, rng));
  const auto w = r_eps_weights(f, 0.7);
  for (std::size_t i = 0; i < w.num_groups(); ++i) EXPECT_LE(w.group_norm(i), 1.0 + 1e-15);
}

TEST(Smoothing, IdentityGradientIsSignAwayFromKink) {
  const TwoBlockPoint X{{0.5, -2.0}, {1.5, -0.3}};
  const auto g = grad_r_eps(scalar_groups(X), scalar_identity_vjp(2), 0.1);
  EXPECT_EQ(g.x1, (Vector{1.0, -1.0}));
  EXPECT_EQ(g.x2, (Vector{1.0, -1.0}));
}

TEST(Smoothing, IdentityGradientIsScaledInsideBall) {
  const TwoBlockPoint X{{0.05, -0.02}, {0.0, 0.1}};
  const auto g = grad_r_eps(scalar_groups(X), scalar_identity_vjp(2), 0.1);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_DOUBLE_EQ(g.x1[i], X.x1[i] / 0.1);
    EXPECT_DOUBLE_EQ(g.x2[i], X.x2[i] / 0.1);
  }
}

TEST(Smoothing, TwoLayerExtractorGradientMatchesFiniteDifferences) {
  const std::size_t h = 6, w = 6;
  const auto g = FeatureExtractor::random(2, 3, 0.01, 17);
  std::mt19937_64 rng(8);
  for (int t = 0; t < 5; ++t) {
    const auto X = fixtures::random_point(h * w, h * w, rng, 0.5);
    const double eps = 0.05;
    auto vjp = [&](const GroupedFeatures& wts) { return g.vjp(X, h, w, wts); };
    const auto grad = grad_r_eps(g.forward(X, h, w), vjp, eps);
    const auto fd = fd_gradient([&](const TwoBlockPoint& Y) { return r_eps(g.forward(Y, h, w), eps); }, X);
    EXPECT_LT(relative_error(grad, fd), 1e-5);
  }
}

TEST(Smoothing, C3EqualityWhenEpsEqualsDelta) {
  auto inst = fixtures::small_instance(8, 8, 1);
  auto obj = make_joint_recovery(inst, FeatureExtractor::identity(), 0.1);
  std::mt19937_64 rng(3);
  const auto X = fixtures::random_point(64, 64, rng);
  EXPECT_TRUE(check_c3(obj, [&](double e) { return obj.m(e); }, X, 0.3, 0.3));
}

TEST(Smoothing, C3HandCaseAtBranchBoundary) {
  // One group with ‖g‖ = 1 through an objective whose H is r_ε of a fixed vector.
  struct OneGroup {
    std::size_t size1() const { return 2; }
    std::size_t size2() const { return 1; }
    double h1(std::span<const double>, double) const { return 0.0; }
    double h2(std::span<const double>, double) const { return 0.0; }
    double h(std::span<const double> a, std::span<const double>, double eps) const {
      return r_eps(GroupedFeatures(1, 2, {a[0], a[1]}), eps);
    }
    Vector grad_h1(std::span<const double>, double) const { return {0.0, 0.0}; }
    Vector grad_h2(std::span<const double>, double) const { return {0.0}; }
    Vector grad1_h(std::span<const double>, std::span<const double>, double) const { return {0.0, 0.0}; }
    Vector grad2_h(std::span<const double>, std::span<const double>, double) const { return {0.0}; }
    std::optional<double> lipschitz(double) const { return std::nullopt; }
    double m(double eps) const { return eps / 2; }
  } obj;
  const TwoBlockPoint X{{0.6, 0.8}, {0.0}};
  // Linear branch at ε: (1 − 0.25) + 0.25; quadratic branch at δ: 1/4 + 1.
  EXPECT_DOUBLE_EQ(phi_eps(obj, X, 0.5) + obj.m(0.5), 1.0);
  EXPECT_DOUBLE_EQ(phi_eps(obj, X, 2.0) + obj.m(2.0), 1.25);
  EXPECT_TRUE(check_c3(obj, LinearMFunction{0.5}, X, 0.5, 2.0));
}

TEST(Smoothing, C3RandomSweepOnJointObjective) {
  auto inst = fixtures::small_instance(8, 8, 2);
  auto obj = make_joint_recovery(inst, FeatureExtractor::random(2, 4, 0.01, 3), 0.3);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> logu(-5.0, 0.5);
  for (int t = 0; t < 300; ++t) {
    const auto X = fixtures::random_point(64, 64, rng, 0.2);
    double e = std::exp(logu(rng)), d = std::exp(logu(rng));
    if (e > d) std::swap(e, d);
    ASSERT_TRUE(check_c3(obj, [&](double s) { return obj.m(s); }, X, e, d)) << "eps=" << e << " delta=" << d;
  }
}

TEST(Smoothing, C3RejectsMissingMonotonicityTerm) {
  auto inst = fixtures::small_instance(8, 8, 2);
  auto obj = make_joint_recovery(inst, FeatureExtractor::identity(), 1.0);
  // Every pixel far outside both balls: Φ_ε − Φ_δ = λn(δ − ε)/2 > 0.
  TwoBlockPoint X{Vector(64, 5.0), Vector(64, 5.0)};
  EXPECT_FALSE(check_c3(obj, LinearMFunction{0.0}, X, 0.01, 0.5));
  EXPECT_TRUE(check_c3(obj, [&](double s) { return obj.m(s); }, X, 0.01, 0.5));
}

TEST(Smoothing, C3PreconditionEnforced) {
  QuadraticToy q;
  const TwoBlockPoint X{{1.0}, {1.0}};
  EXPECT_THROW(check_c3(q, LinearMFunction{}, X, 0.5, 0.1), std::invalid_argument);
  EXPECT_THROW(check_c3(q, LinearMFunction{}, X, 0.0, 0.1), std::invalid_argument);
}

TEST(Smoothing, C4StableBranchIdentity) {
  const TwoBlockPoint X{{1.0, -1.0, 1.0}, {-1.0, 1.0, 1.0}};
  EXPECT_TRUE(check_c4_stable_branch(scalar_groups(X), 0.1, 0.01));
  EXPECT_TRUE(check_c4_stable_branch(scalar_groups(X), scalar_identity_vjp(3), 0.1, 0.01));
}

TEST(Smoothing, C4FailsWithGroupInsideBall) {
  const TwoBlockPoint X{{1.0, 0.05}, {-1.0, 1.0}};
  EXPECT_FALSE(check_c4_stable_branch(scalar_groups(X), 0.1, 0.01));
  EXPECT_FALSE(check_c4_stable_branch(scalar_groups(X), scalar_identity_vjp(2), 0.1, 0.01));
}

TEST(Smoothing, C4FixedExtractorRescaledPoint) {
  const std::size_t h = 5, w = 5;
  const auto g = FeatureExtractor::random(2, 3, 0.01, 23, 1);
  std::mt19937_64 rng(31);
  // A 1×1, bias-free net is positively homogeneous away from the activation
  // kink; scale up until the smallest feature norm exceeds 0.3.
  auto X = fixtures::random_point(h * w, h * w, rng);
  for (int it = 0; it < 60; ++it) {
    const auto f = g.forward(X, h, w);
    double mn = 1e300;
    for (std::size_t i = 0; i < f.num_groups(); ++i) mn = std::min(mn, f.group_norm(i));
    if (mn >= 0.3) break;
    for (auto* v : {&X.x1, &X.x2})
      for (auto& x : *v) x *= 1.5;
  }
  const auto f = g.forward(X, h, w);
  for (std::size_t i = 0; i < f.num_groups(); ++i) ASSERT_GE(f.group_norm(i), 0.3);
  auto vjp = [&](const GroupedFeatures& wts) { return g.vjp(X, h, w, wts); };
  EXPECT_TRUE(check_c4_stable_branch(f, vjp, 0.2, 0.1));
}
