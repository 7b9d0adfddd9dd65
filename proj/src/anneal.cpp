#include "hais/anneal.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

#include "hais/parallel.hpp"
#include "hais/rng.hpp"

namespace hais {

namespace {

constexpr std::uint64_t kParticleSalt = 0x70617274u;  // particle sub-streams
constexpr std::uint64_t kSweepSalt = 0x73776565u;     // sweep cell sub-seeds

/// Geometric bridge between proposal and target. energy() records the two
/// component energies of its latest evaluation so the chain loop can reuse
/// them for the next weight term; each worker owns its own instance.
struct BridgeTarget {
  const EnergyModel* q;
  const EnergyModel* p;
  double beta = 0.0;
  mutable double last_eq = 0.0;
  mutable double last_ep = 0.0;

  double energy(const Eigen::VectorXd& x) const {
    last_eq = q->energy(x);
    last_ep = p->energy(x);
    return intermediate_energy(beta, last_eq, last_ep);
  }

  void gradient_into(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
    thread_local Eigen::VectorXd gq;
    q->gradient_into(x, gq);
    p->gradient_into(x, out);
    out *= beta;
    out.noalias() += (1.0 - beta) * gq;
  }
};

double run_one_particle(const GaussianReference& proposal, const EnergyModel& target,
                        const HaisConfig& config, const Schedule& schedule,
                        std::span<const CoordinateBound> bounds, int particle_index,
                        ChainObserver* observer) {
  RandomStream rng(config.seed, kParticleSalt, static_cast<std::uint64_t>(particle_index));
  const KernelConfig kernel = config.kernel();
  const int n_dist = schedule.size();
  const bool uses_momentum = config.estimator != Estimator::kAisMh;

  Particle particle;
  particle.position = proposal.sample(rng);
  if (uses_momentum) particle.momentum = rng.normal_vector(particle.position.size());

  BridgeTarget bridge{&proposal, &target};
  double eq = proposal.energy(particle.position);
  double ep = target.energy(particle.position);
  double beta_prev = 0.0;

  for (int n = 1; n <= n_dist; ++n) {
    const double beta = schedule.betas[static_cast<std::size_t>(n - 1)];
    particle.log_weight += (beta - beta_prev) * (eq - ep);
    if (observer) observer->on_state(particle_index, n, particle.position, particle.momentum);
    if (n == n_dist) break;

    bridge.beta = beta;
    const double e_current = intermediate_energy(beta, eq, ep);
    try {
      switch (config.estimator) {
        case Estimator::kHais: {
          PhasePoint y{std::move(particle.position), std::move(particle.momentum)};
          TransitionOutcome out = hais_transition(y, bridge, kernel, bounds, rng, e_current);
          if (out.accepted) {
            eq = bridge.last_eq;
            ep = bridge.last_ep;
          }
          particle.position = std::move(out.next.position);
          particle.momentum = std::move(out.next.momentum);
          break;
        }
        case Estimator::kAisHmcReset: {
          rng.fill_normal(particle.momentum);
          PhasePoint y{std::move(particle.position), std::move(particle.momentum)};
          PhasePoint prop = leapfrog(y, bridge, kernel.epsilon, bounds);
          const double e1 = bridge.energy(prop.position);
          const double eq1 = bridge.last_eq;
          const double ep1 = bridge.last_ep;
          const double h0 = e_current + 0.5 * y.momentum.squaredNorm();
          const double h1 = e1 + 0.5 * prop.momentum.squaredNorm();
          if (detail::metropolis_accept(h0, h1, rng)) {
            particle.position = std::move(prop.position);
            particle.momentum = -prop.momentum;
            eq = eq1;
            ep = ep1;
          } else {
            particle.position = std::move(y.position);
            particle.momentum = std::move(y.momentum);
          }
          break;
        }
        case Estimator::kAisMh: {
          MhOutcome out =
              mh_transition(particle.position, bridge, config.mh_sigma, bounds, rng, e_current);
          if (out.accepted) {
            particle.position = std::move(out.next);
            eq = bridge.last_eq;
            ep = bridge.last_ep;
          }
          break;
        }
      }
    } catch (NonFiniteDynamics& err) {
      err.beta = beta;
      err.particle = particle_index;
      throw;
    }
    beta_prev = beta;
  }
  return particle.log_weight;
}

}  // namespace

std::string estimator_name(Estimator e) {
  switch (e) {
    case Estimator::kHais: return "hais";
    case Estimator::kAisMh: return "ais-mh";
    case Estimator::kAisHmcReset: return "ais-hmc-reset";
  }
  return "unknown";
}

std::optional<Estimator> parse_estimator(const std::string& name) {
  if (name == "hais") return Estimator::kHais;
  if (name == "ais-mh") return Estimator::kAisMh;
  if (name == "ais-hmc-reset") return Estimator::kAisHmcReset;
  return std::nullopt;
}

Schedule Schedule::linear(int n) { return power(n, 1.0); }

Schedule Schedule::power(int n, double exponent) {
  if (n < 1) throw ContractViolation("Schedule: need at least one distribution");
  if (!(exponent > 0.0)) throw ContractViolation("Schedule: exponent must be positive");
  Schedule s;
  s.betas.resize(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i)
    s.betas[static_cast<std::size_t>(i - 1)] =
        std::pow(static_cast<double>(i) / static_cast<double>(n), exponent);
  s.betas.back() = 1.0;
  return s;
}

void Schedule::validate() const {
  if (betas.empty()) throw ContractViolation("Schedule: empty");
  double prev = 0.0;
  for (double b : betas) {
    if (!(b >= prev) || b < 0.0 || b > 1.0)
      throw ContractViolation("Schedule: betas must be nondecreasing within [0, 1]");
    prev = b;
  }
  if (betas.back() != 1.0) throw ContractViolation("Schedule: final beta must be exactly 1");
}

void HaisConfig::validate() const {
  if (n_distributions < 1) throw ContractViolation("HaisConfig: n_distributions must be >= 1");
  if (n_particles < 2)
    throw ContractViolation("HaisConfig: n_particles must be >= 2 for a standard error");
  if (!(mh_sigma > 0.0)) throw ContractViolation("HaisConfig: mh_sigma must be positive");
  if (!(schedule_power > 0.0)) throw ContractViolation("HaisConfig: schedule_power must be positive");
  kernel().validate();
}

double log_mean_exp(std::span<const double> values) {
  if (values.empty()) throw ContractViolation("log_mean_exp: empty input");
  const double m = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - m);
  return m + std::log(acc / static_cast<double>(values.size()));
}

double effective_sample_size(std::span<const double> log_weights) {
  if (log_weights.empty()) throw ContractViolation("effective_sample_size: empty input");
  const double m = *std::max_element(log_weights.begin(), log_weights.end());
  double sum = 0.0, sum_sq = 0.0;
  for (double lw : log_weights) {
    const double w = std::exp(lw - m);
    sum += w;
    sum_sq += w * w;
  }
  return sum * sum / sum_sq;
}

LogZEstimate run_chain(const GaussianReference& proposal, const EnergyModel& target,
                       const HaisConfig& config, ChainObserver* observer) {
  config.validate();
  if (proposal.dim() != target.dim())
    throw ContractViolation("run_chain: proposal dimension " + std::to_string(proposal.dim()) +
                            " != target dimension " + std::to_string(target.dim()));
  if (!proposal.analytic_log_z())
    throw ContractViolation("run_chain: proposal must have an analytic normalizer");
  const Schedule schedule = config.schedule();
  schedule.validate();
  const auto bounds = target.constraints();

  std::vector<double> log_weights(static_cast<std::size_t>(config.n_particles));
  parallel_for(log_weights.size(), config.threads, [&](std::size_t i) {
    log_weights[i] = run_one_particle(proposal, target, config, schedule, bounds,
                                      static_cast<int>(i), observer);
  });

  LogZEstimate est;
  est.particle_log_weights =
      Eigen::Map<const Eigen::VectorXd>(log_weights.data(), static_cast<Eigen::Index>(log_weights.size()));
  est.log_z = *proposal.analytic_log_z() + log_mean_exp(log_weights);
  est.ess = effective_sample_size(log_weights);

  // Delta method in the shifted domain: the shift cancels in sd(w)/mean(w).
  const double m = est.particle_log_weights.maxCoeff();
  if (std::isfinite(m)) {
    const Eigen::ArrayXd w = (est.particle_log_weights.array() - m).exp();
    const double mean = w.mean();
    const double n = static_cast<double>(w.size());
    const double var = (w - mean).square().sum() / (n - 1.0);
    est.std_err = std::sqrt(var) / (std::sqrt(n) * mean);
  } else {
    est.std_err = std::numeric_limits<double>::quiet_NaN();
  }
  return est;
}

std::vector<SweepRow> convergence_sweep(const GaussianReference& proposal,
                                        const EnergyModel& target, std::span<const int> n_list,
                                        std::span<const Estimator> estimators, int repeats,
                                        const HaisConfig& base) {
  if (n_list.empty()) throw ContractViolation("convergence_sweep: empty N list");
  if (estimators.empty()) throw ContractViolation("convergence_sweep: no estimators");
  if (repeats < 1) throw ContractViolation("convergence_sweep: repeats must be >= 1");
  std::vector<SweepRow> rows;
  rows.reserve(n_list.size() * estimators.size() * static_cast<std::size_t>(repeats));
  for (int n : n_list) {
    for (Estimator est : estimators) {
      for (int rep = 0; rep < repeats; ++rep) {
        HaisConfig config = base;
        config.n_distributions = n;
        config.estimator = est;
        config.seed = derive_seed(base.seed, kSweepSalt,
                                  derive_seed(static_cast<std::uint64_t>(n),
                                              static_cast<std::uint64_t>(est),
                                              static_cast<std::uint64_t>(rep)));
        const auto t0 = std::chrono::steady_clock::now();
        LogZEstimate result = run_chain(proposal, target, config);
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - t0;
        rows.push_back({n, est, rep, result.log_z, result.std_err, result.ess, elapsed.count()});
      }
    }
  }
  return rows;
}

void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows) {
  os << "n_distributions,estimator,repeat,log_z,std_err,ess,seconds\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%s,%d,%.17g,%.17g,%.17g,%.17g\n", r.n_distributions,
                  estimator_name(r.estimator).c_str(), r.repeat, r.log_z, r.std_err, r.ess,
                  r.seconds);
    os << buf;
  }
}

}  // namespace hais
