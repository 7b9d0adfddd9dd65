#pragma once

#include <Eigen/Core>
#include <memory>
#include <optional>
#include <vector>

#include "hais/energy_model.hpp"
#include "hais/rng.hpp"

namespace hais {

enum class Prior { kGaussian, kLaplace };
enum class Expert { kLaplace, kStudentT };

/// Linear generative model: x = Phi a + noise, noise std sigma_n, with a
/// Gaussian or unit-Laplace prior on the coefficients a.
struct LinearGenerative {
  Eigen::MatrixXd phi;  // M x L basis
  double sigma_n = 0.1;
  Prior prior = Prior::kGaussian;

  int data_dim() const { return static_cast<int>(phi.rows()); }
  int latent_dim() const { return static_cast<int>(phi.cols()); }

  void validate() const;

  /// Test-oriented initialization: entries N(0,1)/sqrt(M).
  static LinearGenerative random(int m, int l, Prior prior, std::uint64_t seed,
                                 double sigma_n = 0.1);

  /// Draw x = Phi a + sigma_n eps with a from the prior.
  Eigen::VectorXd sample(RandomStream& rng) const;

  /// Exact log p(x) through the Gaussian marginal N(0, Phi Phi^T + sigma_n^2 I).
  /// Absent for the Laplace prior.
  std::optional<double> marginal_log_likelihood(const Eigen::VectorXd& x) const;
};

/// Bilinear generative model: coefficients decompose as a = (Theta c) .* (Psi d)
/// with a Laplace prior on c and an exponential prior on d >= 0.
struct BilinearGenerative {
  Eigen::MatrixXd phi;    // M x L
  Eigen::MatrixXd theta;  // L x Kc
  Eigen::MatrixXd psi;    // L x Kd
  double sigma_n = 0.1;

  int data_dim() const { return static_cast<int>(phi.rows()); }
  int c_dim() const { return static_cast<int>(theta.cols()); }
  int d_dim() const { return static_cast<int>(psi.cols()); }
  int latent_dim() const { return c_dim() + d_dim(); }

  void validate() const;

  static BilinearGenerative random(int m, int l, int kc, int kd, std::uint64_t seed,
                                   double sigma_n = 0.1);

  Eigen::VectorXd sample(RandomStream& rng) const;
};

/// Product of experts: energy sum_l E(Phi_l x; lambda_l) with Laplace
/// (lambda |u|) or Student-t (lambda log(1+u^2)) experts. Rows of phi are the
/// filters. For the Laplace expert lambda is fixed to all ones; a lambda
/// rescaling there is the same thing as rescaling the filter row.
class PoeModel final : public EnergyModel {
 public:
  PoeModel(Eigen::MatrixXd phi, Eigen::VectorXd lambda, Expert expert);

  static PoeModel laplace(Eigen::MatrixXd phi);
  static PoeModel student_t(Eigen::MatrixXd phi, Eigen::VectorXd lambda);

  /// Filters N(0,1)/sqrt(M); Student-t weights uniform on [0.6, 2] so the
  /// density stays normalizable.
  static PoeModel random(int l, int m, Expert expert, std::uint64_t seed);

  int dim() const override { return static_cast<int>(phi_.cols()); }
  int n_experts() const { return static_cast<int>(phi_.rows()); }
  double energy(const Eigen::VectorXd& x) const override;
  void gradient_into(const Eigen::VectorXd& x, Eigen::VectorXd& out) const override;

  /// Complete-model oracle (square invertible phi):
  ///   Laplace:    L log 2 - log|det phi|
  ///   Student-t:  sum_l log[sqrt(pi) Gamma(lambda_l - 1/2) / Gamma(lambda_l)] - log|det phi|,
  /// absent for non-square or singular phi, or any lambda_l <= 1/2.
  std::optional<double> analytic_log_z() const override;

  const Eigen::MatrixXd& phi() const { return phi_; }
  const Eigen::VectorXd& lambda() const { return lambda_; }
  Expert expert() const { return expert_; }

 private:
  Eigen::MatrixXd phi_;    // L x M
  Eigen::VectorXd lambda_; // L
  Expert expert_;
};

/// Mean-and-covariance RBM marginal energy over the visibles:
/// pooled squared covariance-filter responses normalized by ||x||^2 + 1/2
/// inside a softplus sum, linear mean units inside a second softplus sum,
/// plus a quadratic containment term and a visible bias term.
class McRbm final : public EnergyModel {
 public:
  McRbm(Eigen::MatrixXd p_mat, Eigen::MatrixXd c_mat, Eigen::MatrixXd w_mat,
        Eigen::VectorXd b_m, Eigen::VectorXd b_c, Eigen::VectorXd b_v, double sigma);

  static McRbm random(int m, int l, int k, int j, std::uint64_t seed);

  int dim() const override { return static_cast<int>(c_mat_.cols()); }
  double energy(const Eigen::VectorXd& x) const override;
  void gradient_into(const Eigen::VectorXd& x, Eigen::VectorXd& out) const override;

  const Eigen::MatrixXd& p_mat() const { return p_mat_; }
  const Eigen::MatrixXd& c_mat() const { return c_mat_; }
  const Eigen::MatrixXd& w_mat() const { return w_mat_; }
  const Eigen::VectorXd& b_m() const { return b_m_; }
  const Eigen::VectorXd& b_c() const { return b_c_; }
  const Eigen::VectorXd& b_v() const { return b_v_; }
  double sigma() const { return sigma_; }

 private:
  Eigen::MatrixXd p_mat_;  // L x K pooling
  Eigen::MatrixXd c_mat_;  // L x M covariance filters
  Eigen::MatrixXd w_mat_;  // J x M mean filters
  Eigen::VectorXd b_m_;    // J
  Eigen::VectorXd b_c_;    // K
  Eigen::VectorXd b_v_;    // M
  double sigma_;
};

/// Posterior-over-auxiliaries energy model for one datapoint of a linear
/// generative model. The energy carries every additive constant of the joint
/// (reconstruction normalizer and prior normalizer), so the normalizing
/// integral of exp(-energy) over the auxiliaries IS the datapoint's
/// likelihood p(x), and an annealing estimate of log Z is log p(x) directly.
class LinearPosterior final : public EnergyModel {
 public:
  LinearPosterior(const LinearGenerative& gen, Eigen::VectorXd x);

  int dim() const override { return static_cast<int>(phi_.cols()); }
  double energy(const Eigen::VectorXd& a) const override;
  void gradient_into(const Eigen::VectorXd& a, Eigen::VectorXd& out) const override;

  /// Exact log p(x) for the Gaussian prior; absent for Laplace.
  std::optional<double> analytic_log_z() const override { return analytic_log_z_; }

 private:
  Eigen::MatrixXd phi_;
  Eigen::VectorXd x_;
  double sigma_n_;
  Prior prior_;
  double const_term_;  // (M/2) log 2pi + M log sigma_n + prior normalizer
  std::optional<double> analytic_log_z_;
};

/// Same idea for the bilinear model; the state is the concatenation (c, d)
/// and every d coordinate carries a lower bound at zero.
class BilinearPosterior final : public EnergyModel {
 public:
  BilinearPosterior(const BilinearGenerative& gen, Eigen::VectorXd x);

  int dim() const override { return kc_ + kd_; }
  double energy(const Eigen::VectorXd& z) const override;
  void gradient_into(const Eigen::VectorXd& z, Eigen::VectorXd& out) const override;
  std::span<const CoordinateBound> constraints() const override { return bounds_; }

 private:
  Eigen::MatrixXd phi_, theta_, psi_;
  Eigen::VectorXd x_;
  double sigma_n_;
  int kc_, kd_;
  double const_term_;
  std::vector<CoordinateBound> bounds_;
};

std::unique_ptr<EnergyModel> posterior_model(const LinearGenerative& gen, const Eigen::VectorXd& x);
std::unique_ptr<EnergyModel> posterior_model(const BilinearGenerative& gen, const Eigen::VectorXd& x);

}  // namespace hais
