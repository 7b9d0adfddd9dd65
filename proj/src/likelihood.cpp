#include "hais/likelihood.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>

#include <nlohmann/json.hpp>

#include "hais/parallel.hpp"
#include "hais/rng.hpp"

namespace hais {

namespace {

constexpr std::uint64_t kDatapointSalt = 0x64617461u;

void finalize_moments(LikelihoodReport& report) {
  double sum = 0.0;
  int n = 0;
  for (Eigen::Index i = 0; i < report.per_point.size(); ++i) {
    if (std::isfinite(report.per_point[i])) {
      sum += report.per_point[i];
      ++n;
    }
  }
  if (n == 0) {
    report.mean_ll = std::numeric_limits<double>::quiet_NaN();
    report.std_err = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  report.mean_ll = sum / n;
  double ss = 0.0;
  for (Eigen::Index i = 0; i < report.per_point.size(); ++i)
    if (std::isfinite(report.per_point[i]))
      ss += (report.per_point[i] - report.mean_ll) * (report.per_point[i] - report.mean_ll);
  report.std_err = n > 1 ? std::sqrt(ss / (n - 1)) / std::sqrt(static_cast<double>(n)) : 0.0;
}

}  // namespace

LikelihoodReport analysis_log_likelihood(const EnergyModel& model, const Dataset& data,
                                         const HaisConfig& config) {
  if (data.dim() != model.dim())
    throw ContractViolation("analysis_log_likelihood: data has " + std::to_string(data.dim()) +
                            " columns, model dimension is " + std::to_string(model.dim()));
  GaussianReference proposal = GaussianReference::matching(model);
  LogZEstimate z = run_chain(proposal, model, config);

  LikelihoodReport report;
  report.log_z = z.log_z;
  report.log_z_std_err = z.std_err;
  const int n = data.size();
  report.per_point.resize(n);
  report.per_point_std_err = Eigen::VectorXd::Constant(n, z.std_err);
  report.per_point_ess = Eigen::VectorXd::Constant(n, z.ess);
  for (int i = 0; i < n; ++i) report.per_point[i] = -model.energy(data.point(i)) - z.log_z;
  finalize_moments(report);
  return report;
}

namespace {

using PosteriorFactory = std::function<std::unique_ptr<EnergyModel>(const Eigen::VectorXd&)>;

LikelihoodReport per_point_chains(const PosteriorFactory& make_posterior, const Dataset& data,
                                  const HaisConfig& config) {
  config.validate();  // config problems should not read as datapoint failures
  const int n = data.size();
  LikelihoodReport report;
  report.per_point = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
  report.per_point_std_err = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
  report.per_point_ess = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN());

  std::vector<std::string> errors(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), config.threads, [&](std::size_t i) {
    HaisConfig point_config = config;
    point_config.seed = derive_seed(config.seed, kDatapointSalt, static_cast<std::uint64_t>(i));
    point_config.threads = 1;  // outer loop owns the workers
    try {
      auto target = make_posterior(data.point(static_cast<int>(i)));
      GaussianReference proposal = GaussianReference::matching(*target);
      LogZEstimate z = run_chain(proposal, *target, point_config);
      report.per_point[static_cast<Eigen::Index>(i)] = z.log_z;
      report.per_point_std_err[static_cast<Eigen::Index>(i)] = z.std_err;
      report.per_point_ess[static_cast<Eigen::Index>(i)] = z.ess;
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  double noise_sq = 0.0;
  int ok = 0;
  for (int i = 0; i < n; ++i) {
    if (!errors[static_cast<std::size_t>(i)].empty()) {
      report.failed_indices.push_back(i);
      report.failures.push_back(errors[static_cast<std::size_t>(i)]);
    } else {
      noise_sq += report.per_point_std_err[i] * report.per_point_std_err[i];
      ++ok;
    }
  }
  report.log_z_std_err = ok > 0 ? std::sqrt(noise_sq / ok) : 0.0;
  finalize_moments(report);
  return report;
}

}  // namespace

LikelihoodReport generative_log_likelihood(const LinearGenerative& gen, const Dataset& data,
                                           const HaisConfig& config) {
  if (data.dim() != gen.data_dim())
    throw ContractViolation("generative_log_likelihood: data has " + std::to_string(data.dim()) +
                            " columns, model data dimension is " + std::to_string(gen.data_dim()));
  return per_point_chains([&gen](const Eigen::VectorXd& x) { return posterior_model(gen, x); },
                          data, config);
}

LikelihoodReport generative_log_likelihood(const BilinearGenerative& gen, const Dataset& data,
                                           const HaisConfig& config) {
  if (data.dim() != gen.data_dim())
    throw ContractViolation("generative_log_likelihood: data has " + std::to_string(data.dim()) +
                            " columns, model data dimension is " + std::to_string(gen.data_dim()));
  return per_point_chains([&gen](const Eigen::VectorXd& x) { return posterior_model(gen, x); },
                          data, config);
}

void write_likelihood_csv(std::ostream& os, const LikelihoodReport& report) {
  os << "index,log_likelihood,std_err_logz,ess\n";
  char buf[256];
  for (Eigen::Index i = 0; i < report.per_point.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g\n", static_cast<long long>(i),
                  report.per_point[i], report.per_point_std_err[i], report.per_point_ess[i]);
    os << buf;
  }
  std::snprintf(buf, sizeof(buf), "# summary mean_ll=%.17g std_err=%.17g n_points=%lld failed=%zu\n",
                report.mean_ll, report.std_err, static_cast<long long>(report.per_point.size()),
                report.failed_indices.size());
  os << buf;
}

void write_likelihood_json(std::ostream& os, const LikelihoodReport& report,
                           const std::string& model_kind) {
  nlohmann::json j;
  j["model_kind"] = model_kind;
  j["mean_ll"] = report.mean_ll;
  j["std_err_datapoints"] = report.std_err;
  j["std_err_estimator"] = report.log_z_std_err;
  if (report.log_z) j["log_z"] = *report.log_z;
  j["n_points"] = report.per_point.size();
  j["per_point"] = std::vector<double>(report.per_point.begin(), report.per_point.end());
  j["per_point_std_err"] =
      std::vector<double>(report.per_point_std_err.begin(), report.per_point_std_err.end());
  j["per_point_ess"] =
      std::vector<double>(report.per_point_ess.begin(), report.per_point_ess.end());
  j["failed_indices"] = report.failed_indices;
  j["failures"] = report.failures;
  os << j.dump(2) << "\n";
}

}  // namespace hais
