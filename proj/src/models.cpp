#include "hais/models.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <cmath>

namespace hais {

namespace {

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, double scale,
                              RandomStream& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// LinearGenerative

void LinearGenerative::validate() const {
  if (sigma_n <= 0.0) throw ContractViolation("LinearGenerative: sigma_n must be positive");
  if (phi.rows() < 1 || phi.cols() < 1)
    throw ContractViolation("LinearGenerative: phi must be nonempty");
  if (!phi.allFinite()) throw ContractViolation("LinearGenerative: phi has non-finite entries");
}

LinearGenerative LinearGenerative::random(int m, int l, Prior prior, std::uint64_t seed,
                                          double sigma_n) {
  RandomStream rng(seed);
  LinearGenerative gen;
  gen.phi = random_matrix(m, l, 1.0 / std::sqrt(static_cast<double>(m)), rng);
  gen.sigma_n = sigma_n;
  gen.prior = prior;
  return gen;
}

Eigen::VectorXd LinearGenerative::sample(RandomStream& rng) const {
  Eigen::VectorXd a(latent_dim());
  for (int i = 0; i < latent_dim(); ++i)
    a[i] = prior == Prior::kGaussian ? rng.normal() : rng.laplace();
  Eigen::VectorXd x = phi * a;
  for (int i = 0; i < data_dim(); ++i) x[i] += sigma_n * rng.normal();
  return x;
}

std::optional<double> LinearGenerative::marginal_log_likelihood(const Eigen::VectorXd& x) const {
  if (prior != Prior::kGaussian) return std::nullopt;
  if (x.size() != data_dim())
    throw ContractViolation("marginal_log_likelihood: datapoint length != data dimension");
  const int m = data_dim();
  Eigen::MatrixXd cov = phi * phi.transpose();
  cov.diagonal().array() += sigma_n * sigma_n;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) return std::nullopt;
  double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  double quad = x.dot(llt.solve(x));
  return -0.5 * m * kLog2Pi - 0.5 * log_det - 0.5 * quad;
}

// ---------------------------------------------------------------------------
// BilinearGenerative

void BilinearGenerative::validate() const {
  if (sigma_n <= 0.0) throw ContractViolation("BilinearGenerative: sigma_n must be positive");
  if (theta.rows() != phi.cols() || psi.rows() != phi.cols())
    throw ContractViolation("BilinearGenerative: theta/psi row count must equal phi column count");
  if (!phi.allFinite() || !theta.allFinite() || !psi.allFinite())
    throw ContractViolation("BilinearGenerative: non-finite parameter entries");
}

BilinearGenerative BilinearGenerative::random(int m, int l, int kc, int kd, std::uint64_t seed,
                                              double sigma_n) {
  RandomStream rng(seed);
  const double s = 1.0 / std::sqrt(static_cast<double>(m));
  BilinearGenerative gen;
  gen.phi = random_matrix(m, l, s, rng);
  gen.theta = random_matrix(l, kc, s, rng);
  gen.psi = random_matrix(l, kd, s, rng);
  gen.sigma_n = sigma_n;
  return gen;
}

Eigen::VectorXd BilinearGenerative::sample(RandomStream& rng) const {
  Eigen::VectorXd c(c_dim()), d(d_dim());
  for (int i = 0; i < c_dim(); ++i) c[i] = rng.laplace();
  for (int i = 0; i < d_dim(); ++i) d[i] = rng.exponential();
  Eigen::VectorXd a = (theta * c).cwiseProduct(psi * d);
  Eigen::VectorXd x = phi * a;
  for (int i = 0; i < data_dim(); ++i) x[i] += sigma_n * rng.normal();
  return x;
}

// ---------------------------------------------------------------------------
// PoeModel

PoeModel::PoeModel(Eigen::MatrixXd phi, Eigen::VectorXd lambda, Expert expert)
    : phi_(std::move(phi)), lambda_(std::move(lambda)), expert_(expert) {
  if (lambda_.size() != phi_.rows())
    throw ContractViolation("PoeModel: lambda length must equal the expert count");
  if ((lambda_.array() <= 0.0).any())
    throw ContractViolation("PoeModel: expert weights must be positive");
  if (expert_ == Expert::kLaplace && (lambda_.array() != 1.0).any())
    throw ContractViolation("PoeModel: Laplace experts use lambda = 1 (rescale the filter row)");
  if (!phi_.allFinite()) throw ContractViolation("PoeModel: phi has non-finite entries");
}

PoeModel PoeModel::laplace(Eigen::MatrixXd phi) {
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(phi.rows());
  return PoeModel(std::move(phi), std::move(ones), Expert::kLaplace);
}

PoeModel PoeModel::student_t(Eigen::MatrixXd phi, Eigen::VectorXd lambda) {
  return PoeModel(std::move(phi), std::move(lambda), Expert::kStudentT);
}

PoeModel PoeModel::random(int l, int m, Expert expert, std::uint64_t seed) {
  RandomStream rng(seed);
  Eigen::MatrixXd phi = random_matrix(l, m, 1.0 / std::sqrt(static_cast<double>(m)), rng);
  Eigen::VectorXd lambda(l);
  if (expert == Expert::kLaplace) {
    lambda.setOnes();
  } else {
    for (int i = 0; i < l; ++i) lambda[i] = 0.6 + 1.4 * rng.uniform();
  }
  return PoeModel(std::move(phi), std::move(lambda), expert);
}

double PoeModel::energy(const Eigen::VectorXd& x) const {
  check_dim(x);
  thread_local Eigen::VectorXd u;
  u.noalias() = phi_ * x;
  if (expert_ == Expert::kLaplace) return lambda_.dot(u.cwiseAbs());
  return (lambda_.array() * u.array().square().log1p()).sum();
}

void PoeModel::gradient_into(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
  check_dim(x);
  thread_local Eigen::VectorXd u;
  u.noalias() = phi_ * x;
  if (expert_ == Expert::kLaplace) {
    u = (lambda_.array() * u.array().sign()).matrix();
  } else {
    u = (lambda_.array() * 2.0 * u.array() / (1.0 + u.array().square())).matrix();
  }
  out.noalias() = phi_.transpose() * u;
}

std::optional<double> PoeModel::analytic_log_z() const {
  if (phi_.rows() != phi_.cols()) return std::nullopt;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(phi_);
  double abs_det = std::abs(lu.determinant());
  if (!(abs_det > 0.0) || !std::isfinite(abs_det)) return std::nullopt;
  double log_z = -std::log(abs_det);
  if (expert_ == Expert::kLaplace) {
    log_z += n_experts() * kLog2;  // each 1D factor integrates to 2
  } else {
    for (int l = 0; l < n_experts(); ++l) {
      if (lambda_[l] <= 0.5) return std::nullopt;  // density not normalizable otherwise
      log_z += 0.5 * std::log(M_PI) + std::lgamma(lambda_[l] - 0.5) - std::lgamma(lambda_[l]);
    }
  }
  return log_z;
}

// ---------------------------------------------------------------------------
// McRbm

McRbm::McRbm(Eigen::MatrixXd p_mat, Eigen::MatrixXd c_mat, Eigen::MatrixXd w_mat,
             Eigen::VectorXd b_m, Eigen::VectorXd b_c, Eigen::VectorXd b_v, double sigma)
    : p_mat_(std::move(p_mat)),
      c_mat_(std::move(c_mat)),
      w_mat_(std::move(w_mat)),
      b_m_(std::move(b_m)),
      b_c_(std::move(b_c)),
      b_v_(std::move(b_v)),
      sigma_(sigma) {
  if (sigma_ <= 0.0) throw ContractViolation("McRbm: sigma must be positive");
  if (p_mat_.rows() != c_mat_.rows())
    throw ContractViolation("McRbm: P and C must agree on the covariance-filter count");
  if (b_c_.size() != p_mat_.cols()) throw ContractViolation("McRbm: b_c length != P column count");
  if (b_m_.size() != w_mat_.rows()) throw ContractViolation("McRbm: b_m length != W row count");
  if (b_v_.size() != c_mat_.cols()) throw ContractViolation("McRbm: b_v length != data dimension");
  if (w_mat_.cols() != c_mat_.cols())
    throw ContractViolation("McRbm: W and C must share the data dimension");
  if (!p_mat_.allFinite() || !c_mat_.allFinite() || !w_mat_.allFinite() || !b_m_.allFinite() ||
      !b_c_.allFinite() || !b_v_.allFinite())
    throw ContractViolation("McRbm: non-finite parameter entries");
}

McRbm McRbm::random(int m, int l, int k, int j, std::uint64_t seed) {
  RandomStream rng(seed);
  const double s = 1.0 / std::sqrt(static_cast<double>(m));
  return McRbm(random_matrix(l, k, s, rng), random_matrix(l, m, s, rng),
               random_matrix(j, m, s, rng), s * rng.normal_vector(j), s * rng.normal_vector(k),
               s * rng.normal_vector(m), 1.0);
}

double McRbm::energy(const Eigen::VectorXd& x) const {
  check_dim(x);
  thread_local Eigen::VectorXd u, f, g;
  const double s = x.squaredNorm() + 0.5;
  u.noalias() = c_mat_ * x;                                              // L
  f.noalias() = 0.5 * (p_mat_.transpose() * u.cwiseAbs2()) / s + b_c_;  // K
  g.noalias() = w_mat_ * x + b_m_;                                       // J
  double e = 0.0;
  for (Eigen::Index k = 0; k < f.size(); ++k) e -= softplus(f[k]);
  for (Eigen::Index j = 0; j < g.size(); ++j) e -= softplus(g[j]);
  e += 0.5 / (sigma_ * sigma_) * x.squaredNorm() - x.dot(b_v_);
  return e;
}

void McRbm::gradient_into(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
  check_dim(x);
  thread_local Eigen::VectorXd u, f, g, t, q;
  const double s = x.squaredNorm() + 0.5;
  u.noalias() = c_mat_ * x;
  f.noalias() = 0.5 * (p_mat_.transpose() * u.cwiseAbs2()) / s + b_c_;
  g.noalias() = w_mat_ * x + b_m_;
  t = f.unaryExpr([](double z) { return logistic(z); });  // K
  q.noalias() = p_mat_ * t;                               // L
  // d/dx of -sum softplus(f_k):
  //   -(C^T (q .* u)) / s + (q . u^2) x / s^2
  out.noalias() = -(c_mat_.transpose() * q.cwiseProduct(u)) / s;
  out.noalias() += (q.dot(u.cwiseAbs2()) / (s * s)) * x;
  g = g.unaryExpr([](double z) { return logistic(z); });
  out.noalias() -= w_mat_.transpose() * g;
  out.noalias() += x / (sigma_ * sigma_);
  out -= b_v_;
}

// ---------------------------------------------------------------------------
// LinearPosterior

LinearPosterior::LinearPosterior(const LinearGenerative& gen, Eigen::VectorXd x)
    : phi_(gen.phi), x_(std::move(x)), sigma_n_(gen.sigma_n), prior_(gen.prior) {
  gen.validate();
  if (x_.size() != gen.data_dim())
    throw ContractViolation("posterior_model: datapoint length != data dimension");
  const int m = gen.data_dim();
  const int l = gen.latent_dim();
  const_term_ = 0.5 * m * kLog2Pi + m * std::log(sigma_n_);
  const_term_ += prior_ == Prior::kGaussian ? 0.5 * l * kLog2Pi : l * kLog2;
  if (prior_ == Prior::kGaussian) analytic_log_z_ = gen.marginal_log_likelihood(x_);
}

double LinearPosterior::energy(const Eigen::VectorXd& a) const {
  check_dim(a);
  thread_local Eigen::VectorXd r;
  r = x_;
  r.noalias() -= phi_ * a;
  double e = 0.5 * r.squaredNorm() / (sigma_n_ * sigma_n_) + const_term_;
  e += prior_ == Prior::kGaussian ? 0.5 * a.squaredNorm() : a.lpNorm<1>();
  return e;
}

void LinearPosterior::gradient_into(const Eigen::VectorXd& a, Eigen::VectorXd& out) const {
  check_dim(a);
  thread_local Eigen::VectorXd r;
  r = x_;
  r.noalias() -= phi_ * a;
  out.noalias() = -phi_.transpose() * r / (sigma_n_ * sigma_n_);
  if (prior_ == Prior::kGaussian)
    out += a;
  else
    out += a.array().sign().matrix();
}

// ---------------------------------------------------------------------------
// BilinearPosterior

BilinearPosterior::BilinearPosterior(const BilinearGenerative& gen, Eigen::VectorXd x)
    : phi_(gen.phi),
      theta_(gen.theta),
      psi_(gen.psi),
      x_(std::move(x)),
      sigma_n_(gen.sigma_n),
      kc_(gen.c_dim()),
      kd_(gen.d_dim()) {
  gen.validate();
  if (x_.size() != gen.data_dim())
    throw ContractViolation("posterior_model: datapoint length != data dimension");
  const int m = gen.data_dim();
  // exponential prior on d contributes no normalizer (integrates to 1 per coordinate)
  const_term_ = 0.5 * m * kLog2Pi + m * std::log(sigma_n_) + kc_ * kLog2;
  bounds_.reserve(kd_);
  for (int i = 0; i < kd_; ++i) bounds_.push_back({kc_ + i, 0.0});
}

double BilinearPosterior::energy(const Eigen::VectorXd& z) const {
  check_dim(z);
  thread_local Eigen::VectorXd a, r;
  const auto c = z.head(kc_);
  const auto d = z.tail(kd_);
  a.noalias() = theta_ * c;
  a.array() *= (psi_ * d).array();
  r = x_;
  r.noalias() -= phi_ * a;
  return 0.5 * r.squaredNorm() / (sigma_n_ * sigma_n_) + const_term_ + c.lpNorm<1>() +
         d.lpNorm<1>();
}

void BilinearPosterior::gradient_into(const Eigen::VectorXd& z, Eigen::VectorXd& out) const {
  check_dim(z);
  thread_local Eigen::VectorXd tc, pd, a, r, ga;
  const auto c = z.head(kc_);
  const auto d = z.tail(kd_);
  tc.noalias() = theta_ * c;
  pd.noalias() = psi_ * d;
  a = tc.cwiseProduct(pd);
  r = x_;
  r.noalias() -= phi_ * a;
  ga.noalias() = -phi_.transpose() * r / (sigma_n_ * sigma_n_);
  out.resize(kc_ + kd_);
  out.head(kc_).noalias() = theta_.transpose() * ga.cwiseProduct(pd);
  out.head(kc_) += c.array().sign().matrix();
  out.tail(kd_).noalias() = psi_.transpose() * ga.cwiseProduct(tc);
  out.tail(kd_) += d.array().sign().matrix();
}

std::unique_ptr<EnergyModel> posterior_model(const LinearGenerative& gen, const Eigen::VectorXd& x) {
  return std::make_unique<LinearPosterior>(gen, x);
}

std::unique_ptr<EnergyModel> posterior_model(const BilinearGenerative& gen, const Eigen::VectorXd& x) {
  return std::make_unique<BilinearPosterior>(gen, x);
}

}  // namespace hais
