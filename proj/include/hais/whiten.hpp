#pragma once

#include <Eigen/Core>
#include <vector>

#include "hais/rng.hpp"

namespace hais {

/// Preprocessing state fitted once and then applied to train and test data
/// identically: pixel-space mean, top-M principal directions (orthonormal
/// rows), and per-component scales that bring the fit data to unit variance.
struct WhitenTransform {
  Eigen::VectorXd mean;    // D
  Eigen::MatrixXd basis;   // M x D
  Eigen::VectorXd scales;  // M

  int input_dim() const { return static_cast<int>(basis.cols()); }
  int components() const { return static_cast<int>(basis.rows()); }
};

struct PatchConfig {
  int patch_edge = 16;
  int n_patches = 0;
  bool apply_log = true;
};

/// Draws n_patches square patches uniformly from the images (uniform image,
/// uniform position), flattens them row-major, and takes the log when
/// configured. Raises InputError naming the image and pixel if a nonpositive
/// value meets the log.
Eigen::MatrixXd extract_patches(const std::vector<Eigen::MatrixXd>& images, const PatchConfig& cfg,
                                RandomStream& rng);

/// Mean-subtracts, finds the top-M principal directions of the sample
/// covariance (descending variance, sign fixed so each row's
/// largest-magnitude entry is positive), and records scales giving the fit
/// data unit variance per component. Variances use the population (1/n)
/// convention throughout. A zero-variance component within the top M is a
/// degenerate-data error.
WhitenTransform fit_whiten(const Eigen::MatrixXd& data, int m_components);

Eigen::MatrixXd apply_whiten(const WhitenTransform& t, const Eigen::MatrixXd& rows);
Eigen::MatrixXd invert_whiten(const WhitenTransform& t, const Eigen::MatrixXd& rows);

/// n samples from N(0, covariance); ground-truth data for validation runs.
Eigen::MatrixXd synth_gaussian(int dim, const Eigen::MatrixXd& covariance, int n,
                               RandomStream& rng);

}  // namespace hais
