#include <gtest/gtest.h>

#include <algorithm>

#include "support.hpp"

using namespace lpam;

TEST(Instance, RadialMaskHitsRatio) {
  for (double r : {0.1, 0.2, 0.3, 0.5}) {
    const auto m = radial_mask(32, 32, r);
    EXPECT_GE(m.ratio(), r - 0.01);
    EXPECT_LE(m.ratio(), r + 0.01);
  }
  const auto m = radial_mask(32, 32, 0.3);
  EXPECT_GE(m.count() / 1024.0, 0.29);
  EXPECT_LE(m.count() / 1024.0, 0.31);
  EXPECT_TRUE(m.sampled[0]);  // DC sits on every spoke
}

TEST(Instance, RandomMaskHitsRatioExactly) {
  const auto m = random_mask(20, 10, 0.25, 3);
  EXPECT_EQ(m.count(), 50u);
  EXPECT_EQ(random_mask(20, 10, 0.25, 3).sampled, m.sampled);
  EXPECT_NE(random_mask(20, 10, 0.25, 4).sampled, m.sampled);
}

TEST(Instance, FullSamplingGivesExactData) {
  InstanceSpec s;
  s.height = 8;
  s.width = 8;
  s.ratio = 1.0;
  s.seed = 2;
  const auto inst = generate_instance(s);
  EXPECT_EQ(inst.op.mask().ratio(), 1.0);
  EXPECT_LT(inst.op.fidelity(inst.truth.x1, inst.data.f1), 1e-25);
  EXPECT_LT(inst.op.fidelity(inst.truth.x2, inst.data.f2), 1e-25);
  const auto F = inst.op.transform(inst.truth.x1);
  for (std::size_t i = 0; i < F.size(); ++i) EXPECT_EQ(F[i], inst.data.f1[i]);
}

TEST(Instance, SameSeedBitIdentical) {
  InstanceSpec s;
  s.noise_std = 0.05;
  s.seed = 77;
  const auto a = generate_instance(s), b = generate_instance(s);
  EXPECT_EQ(a.truth, b.truth);
  EXPECT_EQ(a.op.mask().sampled, b.op.mask().sampled);
  EXPECT_EQ(a.data.f1, b.data.f1);
  EXPECT_EQ(a.data.f2, b.data.f2);
  s.seed = 78;
  EXPECT_NE(generate_instance(s).truth, a.truth);
}

TEST(Instance, DataVanishOutsideMask) {
  InstanceSpec s;
  s.noise_std = 0.1;
  s.mask = MaskKind::random;
  const auto inst = generate_instance(s);
  for (std::size_t i = 0; i < inst.op.size(); ++i) {
    if (inst.op.mask().sampled[i]) continue;
    EXPECT_EQ(inst.data.f1[i], Complex(0.0));
    EXPECT_EQ(inst.data.f2[i], Complex(0.0));
  }
}

TEST(Instance, NoiseHasRequestedSpread) {
  InstanceSpec s;
  s.height = 64;
  s.width = 64;
  s.ratio = 0.5;
  s.noise_std = 0.2;
  s.seed = 5;
  const auto noisy = generate_instance(s);
  s.noise_std = 0.0;
  const auto clean = generate_instance(s);
  double re2 = 0.0, im2 = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < noisy.op.size(); ++i) {
    if (!noisy.op.mask().sampled[i]) continue;
    const Complex d = noisy.data.f1[i] - clean.data.f1[i];
    re2 += d.real() * d.real();
    im2 += d.imag() * d.imag();
    ++n;
  }
  EXPECT_NEAR(std::sqrt(re2 / double(n)), 0.2, 0.02);
  EXPECT_NEAR(std::sqrt(im2 / double(n)), 0.2, 0.02);
}

TEST(Instance, PhantomPairSharesSupport) {
  const auto X = shapes_phantom(32, 32, 4);
  EXPECT_DOUBLE_EQ(*std::max_element(X.x1.begin(), X.x1.end()), 1.0);
  EXPECT_DOUBLE_EQ(*std::max_element(X.x2.begin(), X.x2.end()), 1.0);
  EXPECT_GE(*std::min_element(X.x1.begin(), X.x1.end()), 0.0);
  std::size_t both = 0, either = 0;
  for (std::size_t i = 0; i < X.x1.size(); ++i) {
    both += X.x1[i] > 0 && X.x2[i] > 0;
    either += X.x1[i] > 0 || X.x2[i] > 0;
  }
  EXPECT_GT(either, 0u);
  EXPECT_GT(double(both) / double(either), 0.5);
}

TEST(Instance, InvalidRatioRejected) {
  InstanceSpec s;
  for (double r : {0.0, -0.1, 1.5}) {
    s.ratio = r;
    EXPECT_THROW(generate_instance(s), std::invalid_argument);
  }
  EXPECT_THROW(radial_mask(8, 8, 0.0), std::invalid_argument);
  EXPECT_THROW(parse_mask_kind("spiral"), std::invalid_argument);
}
