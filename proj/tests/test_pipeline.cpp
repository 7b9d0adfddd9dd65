#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hais/dataset_io.hpp"
#include "hais/model_io.hpp"
#include "hais/whiten.hpp"
#include "test_util.hpp"

using namespace hais;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "hais_pipeline_tests";
    fs::create_directories(d);
    return d;
  }();
  return dir / name;
}

Eigen::VectorXd population_variance(const Eigen::MatrixXd& rows) {
  Eigen::RowVectorXd mean = rows.colwise().mean();
  return ((rows.rowwise() - mean).array().square().colwise().sum() /
          static_cast<double>(rows.rows()))
      .matrix()
      .transpose();
}

}  // namespace

TEST_CASE("fit + apply gives unit variance, zero mean, orthonormal basis") {
  RandomStream rng(1);
  Eigen::MatrixXd cov(4, 4);
  cov << 4.0, 1.0, 0.5, 0.0, 1.0, 3.0, 0.2, 0.1, 0.5, 0.2, 2.0, 0.3, 0.0, 0.1, 0.3, 1.0;
  Eigen::MatrixXd data = synth_gaussian(4, cov, 10000, rng);
  data.rowwise() += Eigen::RowVector4d(5.0, -2.0, 0.0, 1.0);

  WhitenTransform t = fit_whiten(data, 4);
  Eigen::MatrixXd white = apply_whiten(t, data);

  Eigen::VectorXd var = population_variance(white);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(var[i] - 1.0) < 1e-6);
  CHECK(white.colwise().mean().lpNorm<Eigen::Infinity>() < 1e-10);
  Eigen::MatrixXd gram = t.basis * t.basis.transpose();
  CHECK((gram - Eigen::MatrixXd::Identity(4, 4)).lpNorm<Eigen::Infinity>() < 1e-10);
  // components ordered by decreasing variance
  for (int i = 1; i < 4; ++i) CHECK(t.scales[i] <= t.scales[i - 1] + 1e-12);
}

TEST_CASE("whitened identity-covariance sample has near-identity covariance") {
  RandomStream rng(2);
  Eigen::MatrixXd data = synth_gaussian(3, Eigen::MatrixXd::Identity(3, 3), 10000, rng);
  WhitenTransform t = fit_whiten(data, 3);
  Eigen::MatrixXd white = apply_whiten(t, data);
  Eigen::MatrixXd cov = white.transpose() * white / static_cast<double>(white.rows());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) CHECK(std::abs(cov(i, j)) < 0.05);
}

TEST_CASE("rank-1 data: the single component aligns with the generating direction") {
  RandomStream rng(3);
  Eigen::VectorXd direction(3);
  direction << 2.0, -1.0, 0.5;
  direction.normalize();
  Eigen::MatrixXd data(500, 3);
  for (int i = 0; i < 500; ++i) data.row(i) = (rng.normal() * direction).transpose();
  WhitenTransform t = fit_whiten(data, 1);
  const double cosine = std::abs(t.basis.row(0).dot(direction));
  CHECK(cosine > 1.0 - 1e-8);
}

TEST_CASE("duplicating every row leaves the transform unchanged") {
  RandomStream rng(4);
  Eigen::MatrixXd data = synth_gaussian(3, Eigen::MatrixXd::Identity(3, 3), 400, rng);
  Eigen::MatrixXd doubled(800, 3);
  doubled << data, data;
  WhitenTransform a = fit_whiten(data, 2);
  WhitenTransform b = fit_whiten(doubled, 2);
  CHECK((a.mean - b.mean).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK((a.basis - b.basis).lpNorm<Eigen::Infinity>() < 1e-10);
  CHECK((a.scales - b.scales).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("degenerate data is rejected") {
  Eigen::MatrixXd constant = Eigen::MatrixXd::Constant(50, 3, 2.5);
  CHECK_THROWS_AS(fit_whiten(constant, 2), InputError);
  // rank-1 data with two requested components
  RandomStream rng(5);
  Eigen::MatrixXd rank1(100, 3);
  for (int i = 0; i < 100; ++i) rank1.row(i) = Eigen::RowVector3d(1, 1, 1) * rng.normal();
  CHECK_THROWS_AS(fit_whiten(rank1, 2), InputError);
}

TEST_CASE("apply then invert is the identity on the retained span") {
  RandomStream rng(6);
  Eigen::MatrixXd data = synth_gaussian(4, Eigen::MatrixXd::Identity(4, 4), 300, rng);
  WhitenTransform t = fit_whiten(data, 4);
  Eigen::MatrixXd roundtrip = invert_whiten(t, apply_whiten(t, data));
  CHECK((roundtrip - data).lpNorm<Eigen::Infinity>() < 1e-8);

  // with truncation, the residual is the discarded-component energy
  WhitenTransform t2 = fit_whiten(data, 2);
  Eigen::MatrixXd rt2 = invert_whiten(t2, apply_whiten(t2, data));
  const double residual = (rt2 - data).squaredNorm();
  const double discarded =
      population_variance(data).sum() - t2.scales.array().square().sum();
  CHECK(residual / data.rows() == doctest::Approx(discarded).epsilon(1e-6));
}

TEST_CASE("apply with scales of one and identity basis is pure mean subtraction") {
  WhitenTransform t;
  t.mean = Eigen::Vector3d(1.0, 2.0, 3.0);
  t.basis = Eigen::MatrixXd::Identity(3, 3);
  t.scales = Eigen::VectorXd::Ones(3);
  Eigen::MatrixXd rows(2, 3);
  rows << 1, 2, 3, 2, 4, 6;
  Eigen::MatrixXd out = apply_whiten(t, rows);
  CHECK(out.row(0).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(out(1, 0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(apply_whiten(t, Eigen::MatrixXd::Zero(2, 4)), ContractViolation);
}

TEST_CASE("extract_patches: log of a constant-e image is all ones") {
  PatchConfig cfg{2, 3, true};
  RandomStream rng(7);
  std::vector<Eigen::MatrixXd> images = {Eigen::MatrixXd::Constant(5, 5, std::exp(1.0))};
  Eigen::MatrixXd patches = extract_patches(images, cfg, rng);
  REQUIRE(patches.rows() == 3);
  REQUIRE(patches.cols() == 4);
  CHECK((patches.array() - 1.0).abs().maxCoeff() < 1e-14);
}

TEST_CASE("extract_patches: full-size patch is the whole image, deterministically") {
  PatchConfig cfg{3, 2, false};
  RandomStream rng(8);
  Eigen::MatrixXd img(3, 3);
  img << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  Eigen::MatrixXd patches = extract_patches({img}, cfg, rng);
  for (int p = 0; p < 2; ++p)
    for (int i = 0; i < 9; ++i) CHECK(patches(p, i) == doctest::Approx(i + 1.0));
}

TEST_CASE("extract_patches: fixed seed reproduces the patch set") {
  PatchConfig cfg{4, 10, false};
  RandomStream rng_a(9), rng_b(9);
  std::vector<Eigen::MatrixXd> images = {Eigen::MatrixXd::Random(16, 16).cwiseAbs(),
                                         Eigen::MatrixXd::Random(12, 20).cwiseAbs()};
  Eigen::MatrixXd a = extract_patches(images, cfg, rng_a);
  Eigen::MatrixXd b = extract_patches(images, cfg, rng_b);
  CHECK((a - b).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("extract_patches: nonpositive pixel under log names image and location") {
  PatchConfig cfg{2, 5, true};
  RandomStream rng(10);
  Eigen::MatrixXd img = Eigen::MatrixXd::Constant(2, 2, 1.0);
  img(1, 1) = 0.0;
  try {
    extract_patches({img}, cfg, rng);
    FAIL("expected InputError");
  } catch (const InputError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("image 0") != std::string::npos);
    CHECK(msg.find("(1,1)") != std::string::npos);
  }
}

TEST_CASE("extract_patches: undersized image is rejected") {
  PatchConfig cfg{8, 1, false};
  RandomStream rng(11);
  CHECK_THROWS_AS(extract_patches({Eigen::MatrixXd::Ones(4, 10)}, cfg, rng), InputError);
}

TEST_CASE("synth_gaussian: moments and edge cases") {
  RandomStream rng(12);
  Eigen::MatrixXd sample = synth_gaussian(1, 4.0 * Eigen::MatrixXd::Identity(1, 1), 100000, rng);
  const double sd = std::sqrt(population_variance(sample)[0]);
  CHECK(std::abs(sd - 2.0) / 2.0 < 0.02);

  Eigen::MatrixXd id_sample = synth_gaussian(3, Eigen::MatrixXd::Identity(3, 3), 100000, rng);
  Eigen::MatrixXd cov =
      id_sample.transpose() * id_sample / static_cast<double>(id_sample.rows());
  CHECK((cov - Eigen::MatrixXd::Identity(3, 3)).lpNorm<Eigen::Infinity>() < 0.02);

  CHECK(synth_gaussian(2, Eigen::MatrixXd::Identity(2, 2), 0, rng).rows() == 0);

  Eigen::MatrixXd not_pd(2, 2);
  not_pd << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(synth_gaussian(2, not_pd, 5, rng), InputError);
}

TEST_CASE("matrix io: text and binary round-trips") {
  RandomStream rng(13);
  Eigen::MatrixXd m(7, 3);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = std::exp(20.0 * rng.normal());
  m(0, 0) = -m(0, 0);
  m(3, 2) = 0.0;

  SUBCASE("binary is bit-exact and sniffed by magic") {
    const fs::path p = temp_file("roundtrip.mat");
    write_matrix(p, m, true);
    Eigen::MatrixXd back = read_matrix(p);
    REQUIRE(back.rows() == m.rows());
    CHECK((back - m).lpNorm<Eigen::Infinity>() == 0.0);
  }
  SUBCASE("text survives at full printed precision") {
    const fs::path p = temp_file("roundtrip.txt");
    write_matrix(p, m, false);
    Eigen::MatrixXd back = read_matrix(p);
    REQUIRE(back.rows() == m.rows());
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double a = m.data()[i], b = back.data()[i];
      CHECK(std::abs(a - b) <= 1e-15 * std::abs(a));
    }
  }
}

TEST_CASE("matrix io: malformed inputs raise input errors") {
  std::istringstream ragged("1 2 3\n4 5\n");
  CHECK_THROWS_AS(read_matrix_text(ragged, "ragged"), InputError);
  std::istringstream alpha("1 2\n3 x\n");
  CHECK_THROWS_AS(read_matrix_text(alpha, "alpha"), InputError);
  std::istringstream empty("");
  CHECK_THROWS_AS(read_matrix_text(empty, "empty"), InputError);
  std::istringstream bad_magic("NOTMAGIC desu");
  CHECK_THROWS_AS(read_matrix_binary(bad_magic, "bad"), InputError);
}

TEST_CASE("pgm io: 8- and 16-bit round-trips") {
  Eigen::MatrixXd img(3, 4);
  img << 0, 10, 20, 30, 40, 50, 60, 255, 128, 7, 3, 99;
  const fs::path p8 = temp_file("img8.pgm");
  write_pgm(p8, img, 255);
  CHECK((read_pgm(p8) - img).lpNorm<Eigen::Infinity>() == 0.0);

  Eigen::MatrixXd wide = 250.0 * img;
  const fs::path p16 = temp_file("img16.pgm");
  write_pgm(p16, wide, 65535);
  CHECK((read_pgm(p16) - wide).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("pgm io: ascii variant and malformed headers") {
  const fs::path p = temp_file("ascii.pgm");
  {
    std::ofstream os(p);
    os << "P2\n# comment line\n2 2\n255\n1 2\n3 4\n";
  }
  Eigen::MatrixXd img = read_pgm(p);
  CHECK(img(0, 0) == 1.0);
  CHECK(img(1, 1) == 4.0);

  const fs::path bad = temp_file("bad.pgm");
  {
    std::ofstream os(bad);
    os << "P7\n2 2\n255\n";
  }
  CHECK_THROWS_AS(read_pgm(bad), InputError);
}

TEST_CASE("transform json round-trip") {
  RandomStream rng(14);
  Eigen::MatrixXd data = synth_gaussian(3, Eigen::MatrixXd::Identity(3, 3), 200, rng);
  WhitenTransform t = fit_whiten(data, 2);
  const fs::path p = temp_file("transform.json");
  save_transform(p, t);
  WhitenTransform back = load_transform(p);
  CHECK((back.mean - t.mean).lpNorm<Eigen::Infinity>() < 1e-15);
  CHECK((back.basis - t.basis).lpNorm<Eigen::Infinity>() < 1e-15);
  CHECK((back.scales - t.scales).lpNorm<Eigen::Infinity>() < 1e-15);
}

TEST_CASE("model json: every type round-trips through its writer") {
  const fs::path p = temp_file("model.json");

  SUBCASE("gaussian_reference") {
    GaussianReference g(3, Eigen::Vector3d(1.0, 2.0, 3.0));
    std::ofstream(p) << model_to_json(g).dump();
    LoadedModel m = load_model(p);
    CHECK(m.type == "gaussian_reference");
    REQUIRE(m.analysis);
    CHECK(m.analysis->dim() == 3);
    CHECK(*m.analysis->analytic_log_z() == doctest::Approx(*g.analytic_log_z()));
  }
  SUBCASE("poe") {
    PoeModel poe = PoeModel::random(4, 3, Expert::kStudentT, 20);
    std::ofstream(p) << model_to_json(poe).dump();
    LoadedModel m = load_model(p);
    REQUIRE(m.analysis);
    RandomStream rng(21);
    Eigen::VectorXd x = rng.normal_vector(3);
    CHECK(m.analysis->energy(x) == doctest::Approx(poe.energy(x)).epsilon(1e-14));
  }
  SUBCASE("mcrbm") {
    McRbm rbm = McRbm::random(3, 4, 2, 2, 22);
    std::ofstream(p) << model_to_json(rbm).dump();
    LoadedModel m = load_model(p);
    REQUIRE(m.analysis);
    RandomStream rng(23);
    Eigen::VectorXd x = rng.normal_vector(3);
    CHECK(m.analysis->energy(x) == doctest::Approx(rbm.energy(x)).epsilon(1e-14));
  }
  SUBCASE("linear_generative") {
    LinearGenerative gen = LinearGenerative::random(3, 2, Prior::kLaplace, 24);
    std::ofstream(p) << model_to_json(gen).dump();
    LoadedModel m = load_model(p);
    REQUIRE(m.linear);
    CHECK(m.is_generative());
    CHECK(m.linear->prior == Prior::kLaplace);
    CHECK((m.linear->phi - gen.phi).lpNorm<Eigen::Infinity>() < 1e-15);
  }
  SUBCASE("bilinear_generative") {
    BilinearGenerative gen = BilinearGenerative::random(3, 2, 2, 2, 25);
    std::ofstream(p) << model_to_json(gen).dump();
    LoadedModel m = load_model(p);
    REQUIRE(m.bilinear);
    CHECK(m.data_dim() == 3);
  }
}

TEST_CASE("model json: errors name the offending field") {
  const fs::path p = temp_file("broken.json");
  std::ofstream(p) << R"({"model_type": "poe", "expert": "laplace"})";
  try {
    load_model(p);
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("phi") != std::string::npos);
  }

  std::ofstream(p) << R"({"model_type": "warp_drive"})";
  CHECK_THROWS_AS(load_model(p), InputError);

  std::ofstream(p) << "{ not json";
  CHECK_THROWS_AS(load_model(p), InputError);
}

TEST_CASE("file digests are stable and content-sensitive") {
  const fs::path a = temp_file("digest_a.txt");
  const fs::path b = temp_file("digest_b.txt");
  std::ofstream(a) << "hello";
  std::ofstream(b) << "hello!";
  CHECK(fnv1a64_hex(a) == fnv1a64_hex(a));
  CHECK(fnv1a64_hex(a) != fnv1a64_hex(b));
  CHECK(fnv1a64_hex(a).size() == 16);
}
