#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>

#include "lpam/core.hpp"
#include "lpam/dft.hpp"
#include "lpam/extractor.hpp"
#include "lpam/instance.hpp"
#include "lpam/smoothing.hpp"

namespace lpam {

/// Φ_ε(X) = ½‖PFx1 − f1‖² + ½‖PFx2 − f2‖² + λ r_ε(g(X)).
class JointRecoveryObjective {
public:
  JointRecoveryObjective(MaskedDft op, KSpaceData data, FeatureExtractor extractor, double lambda)
      : op_(std::move(op)), data_(std::move(data)), g_(std::move(extractor)), lambda_(lambda) {
    if (!(lambda_ >= 0.0)) throw std::invalid_argument("regularization weight must be >= 0");
    if (data_.f1.size() != op_.size() || data_.f2.size() != op_.size())
      throw std::invalid_argument("k-space data does not match the operator shape");
    lip_g_ = g_.lipschitz_bound();
    lip_jac_g_ = g_.jacobian_lipschitz_bound();
  }

  std::size_t size1() const { return op_.size(); }
  std::size_t size2() const { return op_.size(); }
  std::size_t num_groups() const { return op_.size(); }
  std::size_t height() const { return op_.height(); }
  std::size_t width() const { return op_.width(); }
  double lambda() const { return lambda_; }
  const MaskedDft& op() const { return op_; }
  const KSpaceData& data() const { return data_; }
  const FeatureExtractor& extractor() const { return g_; }

  double h1(std::span<const double> x1, double) const { return op_.fidelity(x1, data_.f1); }
  double h2(std::span<const double> x2, double) const { return op_.fidelity(x2, data_.f2); }
  Vector grad_h1(std::span<const double> x1, double) const { return op_.grad_fidelity(x1, data_.f1); }
  Vector grad_h2(std::span<const double> x2, double) const { return op_.grad_fidelity(x2, data_.f2); }

  GroupedFeatures features(std::span<const double> x1, std::span<const double> x2) const {
    return g_.forward(point(x1, x2), height(), width());
  }

  double h(std::span<const double> x1, std::span<const double> x2, double eps) const {
    if (lambda_ == 0.0) return 0.0;
    return lambda_ * r_eps(features(x1, x2), eps);
  }

  /// Both partial gradients of λ r_ε(g(X)) from one forward/backward pass.
  TwoBlockPoint grad_h(std::span<const double> x1, std::span<const double> x2, double eps) const {
    const TwoBlockPoint X = point(x1, x2);
    if (lambda_ == 0.0) return TwoBlockPoint::zeros(x1.size(), x2.size());
    FeatureExtractor::Tape tape;
    const GroupedFeatures f = g_.forward(X, height(), width(), &tape);
    GroupedFeatures s = r_eps_weights(f, eps);
    for (auto& v : s.values()) v *= lambda_;
    return g_.vjp(tape, height(), width(), s);
  }

  Vector grad1_h(std::span<const double> x1, std::span<const double> x2, double eps) const {
    return grad_h(x1, x2, eps).x1;
  }
  Vector grad2_h(std::span<const double> x1, std::span<const double> x2, double eps) const {
    return grad_h(x1, x2, eps).x2;
  }

  /// L_ε = 1 + 1 + λ (Lip(g)²/ε + Lip(∇g)·√n). The fidelity gradients are
  /// 1-Lipschitz under the unitary transform; the r_ε weights have unit norm
  /// per group, hence the √n factor on the curvature term.
  std::optional<double> lipschitz(double eps) const {
    detail::require_positive_eps(eps);
    return 2.0 + lambda_ * (lip_g_ * lip_g_ / eps + lip_jac_g_ * std::sqrt(double(num_groups())));
  }

  /// m(ε) = λ n ε / 2
  double m(double eps) const { return 0.5 * lambda_ * double(num_groups()) * eps; }

  /// Φ(X) with the unsmoothed ℓ2,1 term.
  double phi_limit(const TwoBlockPoint& X) const {
    return h1(X.x1, 1.0) + h2(X.x2, 1.0) + lambda_ * l21_norm(features(X.x1, X.x2));
  }

  /// Re(Fᴴ Pᵀ f) per channel.
  TwoBlockPoint zero_filled() const { return {op_.adjoint(data_.f1), op_.adjoint(data_.f2)}; }

private:
  TwoBlockPoint point(std::span<const double> x1, std::span<const double> x2) const {
    if (x1.size() != op_.size() || x2.size() != op_.size())
      throw std::invalid_argument("image length does not match the operator shape");
    return {Vector(x1.begin(), x1.end()), Vector(x2.begin(), x2.end())};
  }

  MaskedDft op_;
  KSpaceData data_;
  FeatureExtractor g_;
  double lambda_;
  double lip_g_ = 1.0;
  double lip_jac_g_ = 0.0;
};

inline JointRecoveryObjective make_joint_recovery(const Instance& inst, FeatureExtractor g,
                                                  double lambda) {
  return JointRecoveryObjective(inst.op, inst.data, std::move(g), lambda);
}

}  // namespace lpam
