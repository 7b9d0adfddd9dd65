#pragma once

#include <Eigen/Core>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "hais/errors.hpp"
#include "hais/rng.hpp"

namespace hais {

inline constexpr double kLog2Pi = 1.8378770664093454836;
inline constexpr double kLog2 = 0.69314718055994530942;

/// Inclusive lower bound on one state coordinate. Samplers keep the chain
/// inside the bound by reflecting position and negating momentum whenever a
/// half-step crosses it.
struct CoordinateBound {
  int index = 0;
  double lower = 0.0;
};

/// The universal contract for an unnormalized density exp(-energy(x)):
/// dimension, energy in nats, gradient, support constraints, and an analytic
/// log partition value when one exists. Implementations are immutable after
/// construction and safe to evaluate from many threads at once.
class EnergyModel {
 public:
  virtual ~EnergyModel() = default;

  virtual int dim() const = 0;
  virtual double energy(const Eigen::VectorXd& x) const = 0;
  virtual void gradient_into(const Eigen::VectorXd& x, Eigen::VectorXd& out) const = 0;

  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const {
    Eigen::VectorXd g(dim());
    gradient_into(x, g);
    return g;
  }

  virtual std::span<const CoordinateBound> constraints() const { return {}; }

  /// log of the normalizing integral, when known in closed form.
  virtual std::optional<double> analytic_log_z() const { return std::nullopt; }

 protected:
  void check_dim(const Eigen::VectorXd& x) const {
    if (x.size() != dim())
      throw ContractViolation("state vector has length " + std::to_string(x.size()) +
                              ", model dimension is " + std::to_string(dim()));
  }
};

/// Separable Gaussian with per-dimension scales, optionally truncated to
/// x_i >= 0 on selected coordinates. This is both the annealing proposal and
/// the simplest analysis model; it is the one distribution the engine can
/// sample from directly.
class GaussianReference final : public EnergyModel {
 public:
  explicit GaussianReference(int dim) : GaussianReference(dim, Eigen::VectorXd::Ones(dim)) {}

  GaussianReference(int dim, Eigen::VectorXd scale, std::vector<CoordinateBound> bounds = {})
      : dim_(dim), scale_(std::move(scale)), bounds_(std::move(bounds)) {
    if (dim_ < 1) throw ContractViolation("GaussianReference: dim must be positive");
    if (scale_.size() != dim_) throw ContractViolation("GaussianReference: scale length != dim");
    if ((scale_.array() <= 0.0).any()) throw ContractViolation("GaussianReference: scales must be positive");
    for (const auto& b : bounds_) {
      if (b.index < 0 || b.index >= dim_)
        throw ContractViolation("GaussianReference: bound index out of range");
      if (b.lower != 0.0)
        throw ContractViolation("GaussianReference: only lower=0 truncation is supported");
    }
  }

  /// Unit-scale proposal over the target's state space, truncated to the
  /// target's half-space constraints so both share one support.
  static GaussianReference matching(const EnergyModel& target) {
    std::vector<CoordinateBound> bounds(target.constraints().begin(), target.constraints().end());
    return GaussianReference(target.dim(), Eigen::VectorXd::Ones(target.dim()), std::move(bounds));
  }

  int dim() const override { return dim_; }

  double energy(const Eigen::VectorXd& x) const override {
    check_dim(x);
    return 0.5 * (x.array() / scale_.array()).square().sum();
  }

  void gradient_into(const Eigen::VectorXd& x, Eigen::VectorXd& out) const override {
    check_dim(x);
    out = (x.array() / scale_.array().square()).matrix();
  }

  std::span<const CoordinateBound> constraints() const override { return bounds_; }

  /// (d/2) log 2pi + sum log scale, minus log 2 per truncated coordinate.
  std::optional<double> analytic_log_z() const override {
    return 0.5 * dim_ * kLog2Pi + scale_.array().log().sum() -
           kLog2 * static_cast<double>(bounds_.size());
  }

  Eigen::VectorXd sample(RandomStream& rng) const {
    Eigen::VectorXd x(dim_);
    for (int i = 0; i < dim_; ++i) x[i] = scale_[i] * rng.normal();
    for (const auto& b : bounds_) x[b.index] = std::abs(x[b.index]);
    return x;
  }

  const Eigen::VectorXd& scale() const { return scale_; }

 private:
  int dim_;
  Eigen::VectorXd scale_;
  std::vector<CoordinateBound> bounds_;
};

}  // namespace hais
