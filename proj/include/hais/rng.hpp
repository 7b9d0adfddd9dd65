#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>

namespace hais {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent sub-seed from (seed, a, b). Used to give every
/// particle, datapoint and sweep cell its own stream so results do not
/// depend on scheduling order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(seed ^ splitmix64(a ^ splitmix64(b)));
}

/// A self-contained random stream: one engine plus the distributions the
/// samplers need. Streams are cheap to construct; concurrent code makes one
/// per unit of work instead of sharing.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) { reseed(seed); }

  RandomStream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    reseed(derive_seed(seed, a, b));
  }

  void reseed(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      0x48414953u, 0x52414e44u};
    gen_.seed(seq);
    normal_.reset();
    unif_.reset();
  }

  double normal() { return normal_(gen_); }

  /// Uniform on [0, 1).
  double uniform() { return unif_(gen_); }

  /// Uniform integer on [0, n).
  std::int64_t uniform_int(std::int64_t n) {
    return std::uniform_int_distribution<std::int64_t>(0, n - 1)(gen_);
  }

  /// Unit Laplace draw (density exp(-|x|)/2).
  double laplace() {
    double u = uniform();
    return u < 0.5 ? std::log(2.0 * u + 1e-300) : -std::log(2.0 * (1.0 - u) + 1e-300);
  }

  /// Unit exponential draw (density exp(-x) on x >= 0).
  double exponential() { return -std::log(1.0 - uniform() + 1e-300); }

  Eigen::VectorXd normal_vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    fill_normal(v);
    return v;
  }

  void fill_normal(Eigen::Ref<Eigen::VectorXd> v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal_(gen_);
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
};

}  // namespace hais
