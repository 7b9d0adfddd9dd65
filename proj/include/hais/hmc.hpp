#pragma once

#include <Eigen/Core>
#include <cmath>
#include <concepts>
#include <optional>
#include <span>
#include <utility>

#include "hais/energy_model.hpp"
#include "hais/errors.hpp"
#include "hais/rng.hpp"

namespace hais {

/// Position/momentum pair for Hamiltonian dynamics.
struct PhasePoint {
  Eigen::VectorXd position;
  Eigen::VectorXd momentum;
};

/// Half the momentum power is randomized per unit of simulation time; one
/// unit of simulation time is 1/epsilon kernel steps, so
/// (1 - gamma)^(1/epsilon) = 1/2.
inline double default_gamma(double epsilon) { return 1.0 - std::exp2(-epsilon); }

struct KernelConfig {
  double epsilon = 0.2;
  double gamma = default_gamma(0.2);

  void validate() const {
    if (!(epsilon > 0.0)) throw ContractViolation("KernelConfig: epsilon must be positive");
    if (!(gamma > 0.0) || gamma > 1.0)
      throw ContractViolation("KernelConfig: gamma must lie in (0, 1]");
  }
};

template <class T>
concept GradientTarget = requires(const T& t, const Eigen::VectorXd& x, Eigen::VectorXd& out) {
  t.gradient_into(x, out);
};

template <class T>
concept DynamicsTarget = GradientTarget<T> && requires(const T& t, const Eigen::VectorXd& x) {
  { t.energy(x) } -> std::convertible_to<double>;
};

/// Adapts plain callables (energy(x) -> double, gradient(x) -> VectorXd) to
/// the target concept the kernel functions expect.
template <class EnergyFn, class GradFn>
struct FunctionTarget {
  EnergyFn energy_fn;
  GradFn gradient_fn;
  double energy(const Eigen::VectorXd& x) const { return energy_fn(x); }
  void gradient_into(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
    out = gradient_fn(x);
  }
};
template <class EnergyFn, class GradFn>
FunctionTarget(EnergyFn, GradFn) -> FunctionTarget<EnergyFn, GradFn>;

/// Folds every out-of-bound coordinate back into the feasible half-space,
/// negating its momentum. A lower bound can be crossed at most once per
/// half-step, but the loop guards the general case.
inline void reflect_at_bounds(Eigen::VectorXd& x, Eigen::VectorXd& v,
                              std::span<const CoordinateBound> bounds) {
  bool again = true;
  while (again) {
    again = false;
    for (const auto& b : bounds) {
      if (x[b.index] < b.lower) {
        x[b.index] = 2.0 * b.lower - x[b.index];
        v[b.index] = -v[b.index];
        if (x[b.index] < b.lower) again = true;
      }
    }
  }
}

inline bool satisfies_bounds(const Eigen::VectorXd& x, std::span<const CoordinateBound> bounds) {
  for (const auto& b : bounds)
    if (x[b.index] < b.lower) return false;
  return true;
}

/// One leapfrog step: half position step, full momentum step using the
/// gradient at the midpoint, half position step. Position half-steps that
/// cross a bound are reflected with the momentum coordinate negated, which
/// keeps the map an involution under momentum reversal.
template <GradientTarget Target>
PhasePoint leapfrog(PhasePoint y, const Target& target, double epsilon,
                    std::span<const CoordinateBound> bounds = {}) {
  if (y.position.size() != y.momentum.size())
    throw ContractViolation("leapfrog: position and momentum lengths differ");
  const double h = 0.5 * epsilon;
  y.position += h * y.momentum;
  reflect_at_bounds(y.position, y.momentum, bounds);
  thread_local Eigen::VectorXd g;
  target.gradient_into(y.position, g);
  if (!g.allFinite())
    throw NonFiniteDynamics("leapfrog: non-finite gradient at midpoint", y.position);
  y.momentum.noalias() -= epsilon * g;
  y.position += h * y.momentum;
  reflect_at_bounds(y.position, y.momentum, bounds);
  return y;
}

template <class GradFn>
  requires(!GradientTarget<GradFn>)
PhasePoint leapfrog(PhasePoint y, const GradFn& grad, double epsilon,
                    std::span<const CoordinateBound> bounds = {}) {
  auto target = FunctionTarget{[](const Eigen::VectorXd&) { return 0.0; }, grad};
  return leapfrog(std::move(y), target, epsilon, bounds);
}

namespace detail {

/// Metropolis rule on the Hamiltonian difference. A NaN proposal Hamiltonian
/// compares false and is rejected, which keeps chains alive in heavy tails.
inline bool metropolis_accept(double h_current, double h_proposal, RandomStream& rng) {
  const double log_ratio = h_current - h_proposal;
  const double u = rng.uniform();
  if (log_ratio >= 0.0) return true;
  return u < std::exp(log_ratio);
}

}  // namespace detail

/// Accept/reject between phase points under H(y) = E(x) + v'v/2. On
/// acceptance the proposal's momentum is negated; on rejection y0 is kept
/// unchanged.
template <class EnergyFn>
PhasePoint accept_reject(const PhasePoint& y0, const PhasePoint& y1, const EnergyFn& energy,
                         RandomStream& rng) {
  const double h0 = energy(y0.position) + 0.5 * y0.momentum.squaredNorm();
  const double h1 = energy(y1.position) + 0.5 * y1.momentum.squaredNorm();
  if (detail::metropolis_accept(h0, h1, rng)) return {y1.position, -y1.momentum};
  return y0;
}

/// Partial momentum refresh: v' = -sqrt(1-gamma) v + sqrt(gamma) r with r
/// standard normal, preserving the unit-Gaussian momentum marginal. gamma=1
/// is a full redraw; the gamma->0 limit is pure negation.
inline void refresh_momentum_inplace(Eigen::VectorXd& v, double gamma, RandomStream& rng) {
  const double keep = -std::sqrt(1.0 - gamma);
  const double mix = std::sqrt(gamma);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = keep * v[i] + mix * rng.normal();
}

inline Eigen::VectorXd refresh_momentum(Eigen::VectorXd v, double gamma, RandomStream& rng) {
  refresh_momentum_inplace(v, gamma, rng);
  return v;
}

struct TransitionOutcome {
  PhasePoint next;
  bool accepted = false;
  double energy = 0.0;  // target energy at next.position
};

/// The annealing transition: leapfrog, Metropolis accept/reject with momentum
/// negation, then partial momentum refresh, exactly once each. The position
/// marginal of its invariant distribution is the target density. Callers that
/// already know E(y.position) pass it to avoid one energy evaluation.
template <DynamicsTarget Target>
TransitionOutcome hais_transition(const PhasePoint& y, const Target& target,
                                  const KernelConfig& config,
                                  std::span<const CoordinateBound> bounds, RandomStream& rng,
                                  std::optional<double> known_energy = std::nullopt) {
  config.validate();
  PhasePoint proposal = leapfrog(y, target, config.epsilon, bounds);
  const double e0 = known_energy ? *known_energy : target.energy(y.position);
  const double e1 = target.energy(proposal.position);
  const double h0 = e0 + 0.5 * y.momentum.squaredNorm();
  const double h1 = e1 + 0.5 * proposal.momentum.squaredNorm();
  TransitionOutcome out;
  if (detail::metropolis_accept(h0, h1, rng)) {
    out.next = {std::move(proposal.position), -proposal.momentum};
    out.accepted = true;
    out.energy = e1;
  } else {
    out.next = y;
    out.accepted = false;
    out.energy = e0;
  }
  refresh_momentum_inplace(out.next.momentum, config.gamma, rng);
  return out;
}

struct MhOutcome {
  Eigen::VectorXd next;
  bool accepted = false;
  double energy = 0.0;
};

/// Random-walk Metropolis baseline: one isotropic Gaussian proposal of the
/// given std per intermediate distribution. Proposals outside the support are
/// rejected outright.
template <DynamicsTarget Target>
MhOutcome mh_transition(const Eigen::VectorXd& x, const Target& target, double sigma,
                        std::span<const CoordinateBound> bounds, RandomStream& rng,
                        std::optional<double> known_energy = std::nullopt) {
  thread_local Eigen::VectorXd proposal;
  proposal.resize(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) proposal[i] = x[i] + sigma * rng.normal();
  const double e0 = known_energy ? *known_energy : target.energy(x);
  const double u = rng.uniform();
  if (satisfies_bounds(proposal, bounds)) {
    const double e1 = target.energy(proposal);
    const double log_ratio = e0 - e1;
    if (log_ratio >= 0.0 || u < std::exp(log_ratio)) return {proposal, true, e1};
  }
  return {x, false, e0};
}

}  // namespace hais
