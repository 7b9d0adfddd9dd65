#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hais/anneal.hpp"
#include "hais/models.hpp"

namespace hais {

/// Test set: one row per datapoint.
struct Dataset {
  Eigen::MatrixXd samples;

  int size() const { return static_cast<int>(samples.rows()); }
  int dim() const { return static_cast<int>(samples.cols()); }
  Eigen::VectorXd point(int i) const { return samples.row(i).transpose(); }
};

/// Average test-set log likelihood with two uncertainty readings: the spread
/// over datapoints and the annealing estimator's own noise, reported
/// separately because they answer different questions.
struct LikelihoodReport {
  double mean_ll = 0.0;
  double std_err = 0.0;           // sd(per_point) / sqrt(|D|), over successful points
  Eigen::VectorXd per_point;      // NaN where a point failed
  std::optional<double> log_z;    // shared log Z for analysis models
  double log_z_std_err = 0.0;     // estimator noise: chain std err (analysis) or rms over chains
  Eigen::VectorXd per_point_std_err;
  Eigen::VectorXd per_point_ess;
  std::vector<int> failed_indices;
  std::vector<std::string> failures;

  int n_succeeded() const { return static_cast<int>(per_point.size()) -
                                   static_cast<int>(failed_indices.size()); }
};

/// Analysis models: one annealing run for the shared log Z from a unit
/// Gaussian proposal, then per-point log likelihood -E(x_i) - log Z.
LikelihoodReport analysis_log_likelihood(const EnergyModel& model, const Dataset& data,
                                         const HaisConfig& config);

/// Generative models: an independent annealing chain per datapoint over the
/// auxiliary space, targeting that point's posterior energy. The proposal is
/// a unit Gaussian truncated to the half-space of any bounded coordinate.
/// A failed point is recorded and skipped; the batch continues.
LikelihoodReport generative_log_likelihood(const LinearGenerative& gen, const Dataset& data,
                                           const HaisConfig& config);
LikelihoodReport generative_log_likelihood(const BilinearGenerative& gen, const Dataset& data,
                                           const HaisConfig& config);

void write_likelihood_csv(std::ostream& os, const LikelihoodReport& report);
void write_likelihood_json(std::ostream& os, const LikelihoodReport& report,
                           const std::string& model_kind);

}  // namespace hais
