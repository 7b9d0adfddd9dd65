#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hais/energy_model.hpp"
#include "hais/errors.hpp"
#include "hais/hmc.hpp"

namespace hais {

enum class Estimator { kHais, kAisMh, kAisHmcReset };

std::string estimator_name(Estimator e);
std::optional<Estimator> parse_estimator(const std::string& name);

/// Mixing fractions beta_1..beta_N, nondecreasing in [0,1] with beta_N = 1.
/// beta_0 = 0 is implicit: the first state is an exact proposal sample.
struct Schedule {
  std::vector<double> betas;

  static Schedule linear(int n);
  /// beta_n = (n/N)^power; power 1 is the default linear spacing.
  static Schedule power(int n, double exponent);

  int size() const { return static_cast<int>(betas.size()); }
  void validate() const;
};

/// Run parameters for one annealing estimate.
struct HaisConfig {
  int n_distributions = 1000;
  int n_particles = 200;
  double epsilon = 0.2;
  /// Momentum refresh fraction; defaults to 1 - 2^(-epsilon) when unset.
  std::optional<double> gamma;
  std::uint64_t seed = 0;
  Estimator estimator = Estimator::kHais;
  /// Proposal std for the random-walk baseline.
  double mh_sigma = 0.1;
  /// Schedule extension knob; 1 keeps the linear beta_n = n/N spacing.
  double schedule_power = 1.0;
  /// Worker cap; 0 means one per hardware thread. Results are identical for
  /// every value.
  int threads = 0;

  double resolved_gamma() const { return gamma.value_or(default_gamma(epsilon)); }
  KernelConfig kernel() const { return {epsilon, resolved_gamma()}; }
  Schedule schedule() const { return Schedule::power(n_distributions, schedule_power); }
  void validate() const;
};

/// One annealing chain's state.
struct Particle {
  Eigen::VectorXd position;
  Eigen::VectorXd momentum;  // empty for the random-walk estimator
  double log_weight = 0.0;
};

/// Aggregated partition-function estimate.
struct LogZEstimate {
  double log_z = 0.0;    // log Z_q + log-mean-exp(particle_log_weights)
  double std_err = 0.0;  // delta method: sd(w) / (sqrt(P) mean(w)), computed in shifted log domain
  double ess = 0.0;      // (sum w)^2 / sum w^2
  Eigen::VectorXd particle_log_weights;
};

/// Geometric bridge energy (1-beta) E_q + beta E_p.
inline double intermediate_energy(double beta, double e_q, double e_p) {
  return (1.0 - beta) * e_q + beta * e_p;
}

/// log((1/n) sum exp(v_i)), shifted by the maximum so finite inputs never
/// overflow.
double log_mean_exp(std::span<const double> values);

double effective_sample_size(std::span<const double> log_weights);

/// Receives every chain state right before its weight term is accumulated
/// (n = 1..N per particle). Used by diagnostics and the identity tests.
/// Callbacks may arrive concurrently from worker threads.
class ChainObserver {
 public:
  virtual ~ChainObserver() = default;
  virtual void on_state(int particle, int n, const Eigen::VectorXd& position,
                        const Eigen::VectorXd& momentum) = 0;
};

/// Runs the configured annealing estimator from the proposal to the target
/// and aggregates particle weights into a LogZEstimate. The proposal must
/// carry an analytic normalizer and share the target's dimension and support.
/// Identical (seed, config) gives bit-identical weights at any thread count.
LogZEstimate run_chain(const GaussianReference& proposal, const EnergyModel& target,
                       const HaisConfig& config, ChainObserver* observer = nullptr);

struct SweepRow {
  int n_distributions = 0;
  Estimator estimator = Estimator::kHais;
  int repeat = 0;
  double log_z = 0.0;
  double std_err = 0.0;
  double ess = 0.0;
  double seconds = 0.0;
};

/// Runs every estimator at every N, `repeats` times each with distinct
/// sub-seeds, in deterministic (N, estimator, repeat) order.
std::vector<SweepRow> convergence_sweep(const GaussianReference& proposal,
                                        const EnergyModel& target, std::span<const int> n_list,
                                        std::span<const Estimator> estimators, int repeats,
                                        const HaisConfig& base);

void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows);

}  // namespace hais
