#include "hais/whiten.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

#include "hais/errors.hpp"

namespace hais {

Eigen::MatrixXd extract_patches(const std::vector<Eigen::MatrixXd>& images, const PatchConfig& cfg,
                                RandomStream& rng) {
  if (cfg.patch_edge < 1) throw ContractViolation("extract_patches: patch_edge must be >= 1");
  if (cfg.n_patches < 0) throw ContractViolation("extract_patches: n_patches must be >= 0");
  if (images.empty()) throw InputError("extract_patches: no images given");
  for (std::size_t k = 0; k < images.size(); ++k) {
    if (images[k].rows() < cfg.patch_edge || images[k].cols() < cfg.patch_edge)
      throw InputError("extract_patches: image " + std::to_string(k) + " is smaller than a " +
                       std::to_string(cfg.patch_edge) + "-pixel patch");
  }

  const int e = cfg.patch_edge;
  Eigen::MatrixXd out(cfg.n_patches, e * e);
  for (int p = 0; p < cfg.n_patches; ++p) {
    const auto k = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(images.size())));
    const Eigen::MatrixXd& img = images[k];
    const auto r0 = static_cast<Eigen::Index>(rng.uniform_int(img.rows() - e + 1));
    const auto c0 = static_cast<Eigen::Index>(rng.uniform_int(img.cols() - e + 1));
    for (int r = 0; r < e; ++r) {
      for (int c = 0; c < e; ++c) {
        double v = img(r0 + r, c0 + c);
        if (cfg.apply_log) {
          if (!(v > 0.0))
            throw InputError("extract_patches: image " + std::to_string(k) + " pixel (" +
                             std::to_string(r0 + r) + "," + std::to_string(c0 + c) +
                             ") is nonpositive; cannot take its log");
          v = std::log(v);
        }
        out(p, r * e + c) = v;
      }
    }
  }
  return out;
}

WhitenTransform fit_whiten(const Eigen::MatrixXd& data, int m_components) {
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  if (m_components < 1) throw ContractViolation("fit_whiten: need at least one component");
  if (m_components > d)
    throw ContractViolation("fit_whiten: more components than data columns");
  if (n < m_components)
    throw ContractViolation("fit_whiten: fewer rows than requested components");

  WhitenTransform t;
  t.mean = data.colwise().mean();
  Eigen::MatrixXd centered = data.rowwise() - t.mean.transpose();
  // population (1/n) normalization, so duplicating the dataset leaves the
  // transform unchanged and the whitened fit data has variance exactly 1
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw InputError("fit_whiten: eigendecomposition failed");

  // SelfAdjointEigenSolver orders ascending; take the top M from the back.
  t.basis.resize(m_components, d);
  t.scales.resize(m_components);
  const double lambda_max = eig.eigenvalues()(d - 1);
  for (int i = 0; i < m_components; ++i) {
    const Eigen::Index src = d - 1 - i;
    const double lambda = eig.eigenvalues()(src);
    if (!(lambda > 0.0) || lambda <= 1e-12 * lambda_max)
      throw InputError("fit_whiten: component " + std::to_string(i) +
                       " has (near-)zero variance; data is degenerate");
    Eigen::VectorXd v = eig.eigenvectors().col(src);
    Eigen::Index argmax = 0;
    v.cwiseAbs().maxCoeff(&argmax);
    if (v[argmax] < 0.0) v = -v;
    t.basis.row(i) = v.transpose();
    t.scales[i] = std::sqrt(lambda);
  }
  return t;
}

Eigen::MatrixXd apply_whiten(const WhitenTransform& t, const Eigen::MatrixXd& rows) {
  if (rows.cols() != t.basis.cols())
    throw ContractViolation("apply_whiten: data has " + std::to_string(rows.cols()) +
                            " columns, transform expects " + std::to_string(t.basis.cols()));
  Eigen::MatrixXd projected = (rows.rowwise() - t.mean.transpose()) * t.basis.transpose();
  projected.array().rowwise() /= t.scales.transpose().array();
  return projected;
}

Eigen::MatrixXd invert_whiten(const WhitenTransform& t, const Eigen::MatrixXd& rows) {
  if (rows.cols() != t.basis.rows())
    throw ContractViolation("invert_whiten: data has " + std::to_string(rows.cols()) +
                            " columns, transform produces " + std::to_string(t.basis.rows()));
  Eigen::MatrixXd scaled = rows;
  scaled.array().rowwise() *= t.scales.transpose().array();
  Eigen::MatrixXd out = scaled * t.basis;
  out.rowwise() += t.mean.transpose();
  return out;
}

Eigen::MatrixXd synth_gaussian(int dim, const Eigen::MatrixXd& covariance, int n,
                               RandomStream& rng) {
  if (dim < 1) throw ContractViolation("synth_gaussian: dim must be positive");
  if (covariance.rows() != dim || covariance.cols() != dim)
    throw ContractViolation("synth_gaussian: covariance must be dim x dim");
  if (n < 0) throw ContractViolation("synth_gaussian: n must be >= 0");
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success)
    throw InputError("synth_gaussian: covariance is not positive definite");
  Eigen::MatrixXd z(n, dim);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = rng.normal();
  return z * llt.matrixU();
}

}  // namespace hais
