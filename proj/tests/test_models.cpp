#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "hais/models.hpp"
#include "test_util.hpp"

using namespace hais;

namespace {

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("poe energy: laplace expert examples") {
  PoeModel poe = PoeModel::laplace(Eigen::MatrixXd::Identity(2, 2));
  CHECK(poe.energy(vec2(0, 0)) == doctest::Approx(0.0));
  CHECK(poe.energy(vec2(2, -3)) == doctest::Approx(5.0));
}

TEST_CASE("poe energy: student-t expert example") {
  PoeModel poe = PoeModel::student_t(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Ones(2));
  CHECK(poe.energy(vec2(1, 0)) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("poe rejects dimension mismatch and bad lambda") {
  PoeModel poe = PoeModel::laplace(Eigen::MatrixXd::Identity(2, 2));
  CHECK_THROWS_AS(poe.energy(Eigen::VectorXd::Zero(3)), ContractViolation);
  CHECK_THROWS_AS(PoeModel(Eigen::MatrixXd::Identity(2, 2), vec2(1.0, -0.5), Expert::kStudentT),
                  ContractViolation);
  CHECK_THROWS_AS(PoeModel(Eigen::MatrixXd::Identity(2, 2), vec2(1.0, 2.0), Expert::kLaplace),
                  ContractViolation);
}

TEST_CASE("poe energy invariant under permuting experts with their weights") {
  PoeModel poe = PoeModel::random(4, 3, Expert::kStudentT, 77);
  Eigen::MatrixXd phi = poe.phi();
  Eigen::VectorXd lambda = poe.lambda();
  const std::vector<int> perm = {2, 0, 3, 1};
  Eigen::MatrixXd phi_p(phi.rows(), phi.cols());
  Eigen::VectorXd lambda_p(lambda.size());
  for (int i = 0; i < 4; ++i) {
    phi_p.row(i) = phi.row(perm[i]);
    lambda_p[i] = lambda[perm[i]];
  }
  PoeModel shuffled = PoeModel::student_t(phi_p, lambda_p);
  RandomStream rng(5);
  for (int i = 0; i < 20; ++i) {
    Eigen::VectorXd x = rng.normal_vector(3);
    CHECK(poe.energy(x) == doctest::Approx(shuffled.energy(x)).epsilon(1e-13));
  }
}

TEST_CASE("poe analytic log z: complete laplace and student-t") {
  PoeModel laplace = PoeModel::laplace(Eigen::MatrixXd::Identity(2, 2));
  REQUIRE(laplace.analytic_log_z());
  CHECK(*laplace.analytic_log_z() == doctest::Approx(std::log(4.0)).epsilon(1e-12));

  PoeModel student =
      PoeModel::student_t(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Ones(2));
  REQUIRE(student.analytic_log_z());
  CHECK(*student.analytic_log_z() == doctest::Approx(2.0 * std::log(M_PI)).epsilon(1e-12));
}

TEST_CASE("poe analytic log z: oracle-unavailable cases") {
  // non-square
  CHECK_FALSE(PoeModel::laplace(Eigen::MatrixXd::Ones(3, 2)).analytic_log_z());
  // singular
  Eigen::MatrixXd sing(2, 2);
  sing << 1, 1, 1, 1;
  CHECK_FALSE(PoeModel::laplace(sing).analytic_log_z());
  // student-t weight at the normalizability edge
  CHECK_FALSE(
      PoeModel::student_t(Eigen::MatrixXd::Identity(2, 2), vec2(0.5, 1.0)).analytic_log_z());
}

TEST_CASE("poe analytic log z matches quadrature (dim 2)") {
  SUBCASE("laplace identity") {
    PoeModel poe = PoeModel::laplace(Eigen::MatrixXd::Identity(2, 2));
    const double z = testutil::quadrature_z(poe);
    CHECK(std::abs(std::exp(*poe.analytic_log_z()) - z) / z < 1e-6);
  }
  SUBCASE("laplace with a rotated filter matrix") {
    Eigen::MatrixXd phi(2, 2);
    phi << 1.2, 0.3, -0.4, 0.9;
    PoeModel poe = PoeModel::laplace(phi);
    const double z = testutil::quadrature_z(poe);
    CHECK(std::abs(std::exp(*poe.analytic_log_z()) - z) / z < 1e-6);
  }
  SUBCASE("student-t with distinct weights and filter scales") {
    // Student-t tails are polynomial, and the nested Cartesian rule only
    // resolves them when they run along the axes, so the filters here are
    // diagonal. The 1-D expert integrals cover general weights below.
    Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(2, 2);
    phi(0, 0) = 1.2;
    phi(1, 1) = 0.8;
    PoeModel poe = PoeModel::student_t(phi, vec2(0.8, 1.4));
    const double z = testutil::quadrature_z(poe);
    CHECK(std::abs(std::exp(*poe.analytic_log_z()) - z) / z < 1e-6);
  }
  SUBCASE("student-t expert integral against the gamma-function form, per weight") {
    for (double lambda : {0.6, 0.8, 1.0, 1.3, 2.0}) {
      const double numeric = testutil::integrate_line(
          [lambda](double u) { return std::pow(1.0 + u * u, -lambda); }, 1e-12);
      const double closed =
          std::exp(0.5 * std::log(M_PI) + std::lgamma(lambda - 0.5) - std::lgamma(lambda));
      CHECK(std::abs(numeric - closed) / closed < 1e-9);
    }
  }
}

TEST_CASE("gaussian reference analytic log z matches quadrature") {
  SUBCASE("1d") {
    GaussianReference g(1, Eigen::VectorXd::Constant(1, 2.0));
    const double z = testutil::quadrature_z(g);
    CHECK(std::abs(std::exp(*g.analytic_log_z()) - z) / z < 1e-8);
  }
  SUBCASE("2d anisotropic") {
    GaussianReference g(2, vec2(1.0, 2.5));
    const double z = testutil::quadrature_z(g);
    CHECK(std::abs(std::exp(*g.analytic_log_z()) - z) / z < 1e-8);
  }
  SUBCASE("2d with one truncated coordinate") {
    GaussianReference g(2, vec2(1.0, 1.5), {{1, 0.0}});
    // integrate x over the line, y over the half-line
    const double z = testutil::integrate_line([&](double x) {
      return testutil::integrate_halfline(
          [&](double y) { return std::exp(-g.energy(vec2(x, y))); }, 1e-11);
    });
    CHECK(std::abs(std::exp(*g.analytic_log_z()) - z) / z < 1e-7);
  }
}

TEST_CASE("mcrbm energy: fixed-point examples") {
  SUBCASE("all parameters zero") {
    McRbm m(Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Zero(1, 2), Eigen::MatrixXd::Zero(1, 2),
            Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(2), 1.0);
    CHECK(m.energy(vec2(0, 0)) == doctest::Approx(-2.0 * std::log(2.0)).epsilon(1e-13));
  }
  SUBCASE("quadratic term only") {
    const int k = 2, j = 3;
    McRbm m(Eigen::MatrixXd::Zero(4, k), Eigen::MatrixXd::Zero(4, 2), Eigen::MatrixXd::Zero(j, 2),
            Eigen::VectorXd::Zero(j), Eigen::VectorXd::Zero(k), Eigen::VectorXd::Zero(2), 1.0);
    // ||x||^2 = 2 -> -(K+J) log 2 + 1
    CHECK(m.energy(vec2(1, 1)) == doctest::Approx(-(k + j) * std::log(2.0) + 1.0).epsilon(1e-13));
  }
}

TEST_CASE("mcrbm reduces to quadratic minus softplus constants when P, W, biases vanish") {
  const int k = 3, j = 2, m_dim = 4;
  const double sigma = 0.7;
  McRbm m(Eigen::MatrixXd::Zero(5, k), Eigen::MatrixXd::Zero(5, m_dim),
          Eigen::MatrixXd::Zero(j, m_dim), Eigen::VectorXd::Zero(j), Eigen::VectorXd::Zero(k),
          Eigen::VectorXd::Zero(m_dim), sigma);
  RandomStream rng(11);
  for (int i = 0; i < 20; ++i) {
    Eigen::VectorXd x = rng.normal_vector(m_dim);
    const double expected = 0.5 / (sigma * sigma) * x.squaredNorm() - (k + j) * std::log(2.0);
    CHECK(m.energy(x) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("mcrbm gradient matches finite differences on a random instance") {
  McRbm m = McRbm::random(3, 4, 2, 2, 1234);
  CHECK(testutil::max_gradient_rel_err(m, 100, 99) < 1e-5);
}

TEST_CASE("gradients match finite differences for every model family") {
  // rel err < 1e-5 at 100 random points each
  SUBCASE("gaussian reference") {
    GaussianReference g(3, Eigen::VectorXd::Constant(3, 1.7));
    CHECK(testutil::max_gradient_rel_err(g, 100, 1) < 1e-5);
  }
  SUBCASE("poe laplace") {
    PoeModel poe = PoeModel::random(5, 4, Expert::kLaplace, 2);
    CHECK(testutil::max_gradient_rel_err(poe, 100, 3) < 1e-5);
  }
  SUBCASE("poe student-t") {
    PoeModel poe = PoeModel::random(5, 4, Expert::kStudentT, 4);
    CHECK(testutil::max_gradient_rel_err(poe, 100, 5) < 1e-5);
  }
  SUBCASE("mcrbm") {
    McRbm m = McRbm::random(4, 5, 3, 3, 6);
    CHECK(testutil::max_gradient_rel_err(m, 100, 7) < 1e-5);
  }
  SUBCASE("linear generative posterior, gaussian prior") {
    LinearGenerative gen = LinearGenerative::random(4, 3, Prior::kGaussian, 8);
    RandomStream rng(9);
    auto post = posterior_model(gen, gen.sample(rng));
    CHECK(testutil::max_gradient_rel_err(*post, 100, 10) < 1e-5);
  }
  SUBCASE("linear generative posterior, laplace prior") {
    LinearGenerative gen = LinearGenerative::random(4, 3, Prior::kLaplace, 12);
    RandomStream rng(13);
    auto post = posterior_model(gen, gen.sample(rng));
    CHECK(testutil::max_gradient_rel_err(*post, 100, 14) < 1e-5);
  }
  SUBCASE("bilinear generative posterior") {
    BilinearGenerative gen = BilinearGenerative::random(4, 3, 2, 2, 16);
    RandomStream rng(17);
    auto post = posterior_model(gen, gen.sample(rng));
    CHECK(testutil::max_gradient_rel_err(*post, 100, 18) < 1e-5);
  }
}

TEST_CASE("linear posterior with zero basis carries the full constant") {
  LinearGenerative gen;
  gen.phi = Eigen::MatrixXd::Zero(2, 3);
  gen.sigma_n = 0.1;
  gen.prior = Prior::kGaussian;
  auto post = posterior_model(gen, Eigen::VectorXd::Zero(2));
  REQUIRE(post->analytic_log_z());
  // -log(2 pi) - 2 log(0.1)
  CHECK(*post->analytic_log_z() == doctest::Approx(2.7672931195787459).epsilon(1e-12));
}

TEST_CASE("linear posterior normalizer equals the marginal by quadrature (M=L=2)") {
  LinearGenerative gen = LinearGenerative::random(2, 2, Prior::kGaussian, 21);
  RandomStream rng(22);
  const Eigen::VectorXd x = gen.sample(rng);
  auto post = posterior_model(gen, x);
  REQUIRE(post->analytic_log_z());
  const double z = testutil::quadrature_z(*post, 1e-11);
  CHECK(std::abs(std::exp(*post->analytic_log_z()) - z) / z < 1e-6);
}

TEST_CASE("laplace prior at a = 0 contributes only normalizer constants") {
  LinearGenerative gen;
  gen.phi = Eigen::MatrixXd::Zero(2, 3);
  gen.sigma_n = 0.1;
  gen.prior = Prior::kLaplace;
  const Eigen::VectorXd x = vec2(0.3, -0.2);
  auto post = posterior_model(gen, x);
  const int m = 2, l = 3;
  const double recon = 0.5 * x.squaredNorm() / 0.01 + 0.5 * m * kLog2Pi + m * std::log(0.1);
  CHECK(post->energy(Eigen::VectorXd::Zero(l)) == doctest::Approx(recon + l * kLog2).epsilon(1e-12));
}

TEST_CASE("bilinear posterior prior block: l1 sums on top of the constants") {
  BilinearGenerative gen;
  gen.phi = Eigen::MatrixXd::Zero(2, 3);
  gen.theta = Eigen::MatrixXd::Zero(3, 2);
  gen.psi = Eigen::MatrixXd::Zero(3, 2);
  gen.sigma_n = 0.1;
  auto post = posterior_model(gen, Eigen::VectorXd::Zero(2));
  Eigen::VectorXd z(4);
  z << 1, -1, 2, 0;  // c = (1,-1), d = (2,0)
  CHECK(post->energy(z) - post->energy(Eigen::VectorXd::Zero(4)) == doctest::Approx(4.0));
  CHECK(post->constraints().size() == 2);
  CHECK(post->constraints()[0].index == 2);
  CHECK(post->constraints()[1].index == 3);
}

TEST_CASE("posterior energy is continuous in the datapoint") {
  LinearGenerative gen = LinearGenerative::random(3, 3, Prior::kGaussian, 31);
  RandomStream rng(32);
  const Eigen::VectorXd x = gen.sample(rng);
  const Eigen::VectorXd a = rng.normal_vector(3);
  auto post = posterior_model(gen, x);
  for (double delta : {1e-3, 1e-5, 1e-7}) {
    Eigen::VectorXd xd = x;
    xd[0] += delta;
    auto post_d = posterior_model(gen, xd);
    CHECK(std::abs(post_d->energy(a) - post->energy(a)) < 1e3 * delta);
  }
}

TEST_CASE("zero-basis marginal is independent of the latent dimension") {
  Eigen::VectorXd x = vec2(0.4, -1.1);
  std::optional<double> reference;
  for (int l : {2, 5, 9}) {
    LinearGenerative gen;
    gen.phi = Eigen::MatrixXd::Zero(2, l);
    gen.sigma_n = 0.1;
    gen.prior = Prior::kGaussian;
    auto ll = gen.marginal_log_likelihood(x);
    REQUIRE(ll);
    if (!reference)
      reference = ll;
    else
      CHECK(*ll == doctest::Approx(*reference).epsilon(1e-12));
  }
}

TEST_CASE("gaussian-prior marginal example") {
  LinearGenerative gen;
  gen.phi = Eigen::MatrixXd::Identity(2, 2);
  gen.sigma_n = 0.1;
  gen.prior = Prior::kGaussian;
  auto ll = gen.marginal_log_likelihood(Eigen::VectorXd::Zero(2));
  REQUIRE(ll);
  // -log(2 pi) - log(1.01)
  CHECK(*ll == doctest::Approx(-1.8478273972625010).epsilon(1e-12));
  // Laplace prior has no closed-form marginal
  gen.prior = Prior::kLaplace;
  CHECK_FALSE(gen.marginal_log_likelihood(Eigen::VectorXd::Zero(2)));
}

TEST_CASE("model energies stay finite on their support") {
  RandomStream rng(41);
  PoeModel poe = PoeModel::random(6, 4, Expert::kStudentT, 42);
  McRbm rbm = McRbm::random(4, 5, 3, 2, 43);
  BilinearGenerative bil = BilinearGenerative::random(3, 4, 2, 2, 44);
  auto post = posterior_model(bil, bil.sample(rng));
  for (int i = 0; i < 200; ++i) {
    CHECK(std::isfinite(poe.energy(rng.normal_vector(4))));
    CHECK(std::isfinite(rbm.energy(rng.normal_vector(4))));
    CHECK(std::isfinite(post->energy(testutil::random_point(*post, rng))));
  }
  // the mcrbm covariance denominator never vanishes, so x = 0 is fine
  CHECK(std::isfinite(rbm.energy(Eigen::VectorXd::Zero(4))));
}

TEST_CASE("random model constructors produce the documented shapes") {
  LinearGenerative lin = LinearGenerative::random(5, 3, Prior::kLaplace, 50);
  CHECK(lin.data_dim() == 5);
  CHECK(lin.latent_dim() == 3);
  lin.validate();

  BilinearGenerative bil = BilinearGenerative::random(5, 4, 3, 2, 51);
  CHECK(bil.data_dim() == 5);
  CHECK(bil.c_dim() == 3);
  CHECK(bil.d_dim() == 2);
  bil.validate();

  PoeModel poe = PoeModel::random(7, 5, Expert::kStudentT, 52);
  CHECK(poe.n_experts() == 7);
  CHECK(poe.dim() == 5);
  CHECK((poe.lambda().array() >= 0.6).all());
  CHECK((poe.lambda().array() <= 2.0).all());
}
