// Command-line front end: partition estimation, test-set likelihoods,
// estimator convergence sweeps, and the patch preprocessing pipeline.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hais/anneal.hpp"
#include "hais/dataset_io.hpp"
#include "hais/likelihood.hpp"
#include "hais/model_io.hpp"
#include "hais/svg_plot.hpp"
#include "hais/version.hpp"
#include "hais/whiten.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::uint64_t seed = 0;
  int n = 1000;
  int particles = 200;
  double epsilon = 0.2;
  double gamma = -1.0;  // negative means derived from epsilon
  std::string estimator = "hais";
  double mh_sigma = 0.1;
  double schedule_power = 1.0;
  int threads = 0;
  std::string out_dir = ".";
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--seed", o.seed, "random seed (default 0)");
  cmd->add_option("--n", o.n, "intermediate distributions N (default 1000)");
  cmd->add_option("--particles", o.particles, "particle count (default 200)");
  cmd->add_option("--epsilon", o.epsilon, "leapfrog step size (default 0.2)");
  cmd->add_option("--gamma", o.gamma,
                  "momentum refresh fraction in (0,1]; default 1-2^(-epsilon)");
  cmd->add_option("--estimator", o.estimator, "hais | ais-mh | ais-hmc-reset");
  cmd->add_option("--mh-sigma", o.mh_sigma, "proposal std for ais-mh (default 0.1)");
  cmd->add_option("--schedule-power", o.schedule_power,
                  "beta_n = (n/N)^p schedule exponent (default 1, linear)");
  cmd->add_option("--threads", o.threads, "worker cap; 0 = one per hardware thread");
  cmd->add_option("--out", o.out_dir, "output directory (default .)");
}

hais::Estimator estimator_from_name(const std::string& name) {
  auto est = hais::parse_estimator(name);
  if (!est)
    throw hais::InputError("unknown estimator \"" + name +
                           "\"; valid names: hais, ais-mh, ais-hmc-reset");
  return *est;
}

hais::HaisConfig to_config(const CommonOpts& o) {
  hais::HaisConfig cfg;
  cfg.n_distributions = o.n;
  cfg.n_particles = o.particles;
  cfg.epsilon = o.epsilon;
  if (o.gamma >= 0.0) cfg.gamma = o.gamma;
  cfg.seed = o.seed;
  cfg.estimator = estimator_from_name(o.estimator);
  cfg.mh_sigma = o.mh_sigma;
  cfg.schedule_power = o.schedule_power;
  cfg.threads = o.threads;
  return cfg;
}

json config_json(const hais::HaisConfig& cfg) {
  json j;
  j["n_distributions"] = cfg.n_distributions;
  j["n_particles"] = cfg.n_particles;
  j["epsilon"] = cfg.epsilon;
  j["gamma"] = cfg.resolved_gamma();
  j["seed"] = cfg.seed;
  j["estimator"] = hais::estimator_name(cfg.estimator);
  j["mh_sigma"] = cfg.mh_sigma;
  j["schedule_power"] = cfg.schedule_power;
  j["threads"] = cfg.threads;
  return j;
}

/// Every command leaves a manifest next to its outputs: the resolved config,
/// input digests and output names. Re-running with the same manifest inputs
/// reproduces the outputs byte for byte (timing columns aside).
struct Manifest {
  json doc;

  Manifest(const std::string& command, const json& config) {
    doc["tool"] = "hais";
    doc["version"] = hais::kVersion;
    doc["command"] = command;
    doc["config"] = config;
    doc["inputs"] = json::array();
    doc["outputs"] = json::array();
  }

  void add_input(const fs::path& p) {
    doc["inputs"].push_back({{"path", p.string()}, {"fnv1a64", hais::fnv1a64_hex(p)}});
  }

  void add_output(const fs::path& p) { doc["outputs"].push_back(p.string()); }

  void write(const fs::path& out_dir) const {
    std::ofstream os(out_dir / "manifest.json");
    if (!os) throw hais::InputError((out_dir / "manifest.json").string() + ": cannot write");
    os << doc.dump(2) << "\n";
  }
};

fs::path ensure_out_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw hais::InputError(dir + ": cannot create output directory");
  return p;
}

void print_kv(const char* key, double value) {
  std::printf("%s %.17g\n", key, value);
}

// ---------------------------------------------------------------------------

int cmd_estimate(const std::string& model_path, const CommonOpts& opts,
                 const std::string& particles_out) {
  const hais::HaisConfig cfg = to_config(opts);
  hais::LoadedModel model = hais::load_model(model_path);
  if (model.is_generative())
    throw hais::InputError(model_path +
                           ": generative models have per-datapoint normalizers; use "
                           "`loglik --generative`");
  const hais::EnergyModel& target = *model.analysis;
  hais::GaussianReference proposal = hais::GaussianReference::matching(target);

  Manifest manifest("estimate", config_json(cfg));
  manifest.add_input(model_path);

  hais::LogZEstimate est = hais::run_chain(proposal, target, cfg);
  print_kv("log_z", est.log_z);
  print_kv("std_err", est.std_err);
  print_kv("ess", est.ess);

  const fs::path out_dir = ensure_out_dir(opts.out_dir);
  if (!particles_out.empty()) {
    std::ofstream os(particles_out);
    if (!os) throw hais::InputError(particles_out + ": cannot write");
    os << "particle,log_weight\n";
    char buf[64];
    for (Eigen::Index i = 0; i < est.particle_log_weights.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%lld,%.17g\n", static_cast<long long>(i),
                    est.particle_log_weights[i]);
      os << buf;
    }
    manifest.add_output(particles_out);
  }
  manifest.write(out_dir);
  return 0;
}

int cmd_loglik(const std::string& model_path, const std::string& data_path,
               const CommonOpts& opts, bool generative) {
  const hais::HaisConfig cfg = to_config(opts);
  hais::LoadedModel model = hais::load_model(model_path);
  hais::Dataset data{hais::read_matrix(data_path)};
  if (data.dim() != model.data_dim())
    throw hais::InputError("dimension mismatch: data has " + std::to_string(data.dim()) +
                           " columns, model expects " + std::to_string(model.data_dim()));
  if (generative && !model.is_generative())
    throw hais::InputError(model_path + ": --generative given but model_type \"" + model.type +
                           "\" is an analysis model");
  if (!generative && model.is_generative())
    throw hais::InputError(model_path + ": model_type \"" + model.type +
                           "\" needs per-datapoint chains; pass --generative");

  Manifest manifest("loglik", config_json(cfg));
  manifest.doc["config"]["generative"] = generative;
  manifest.add_input(model_path);
  manifest.add_input(data_path);

  hais::LikelihoodReport report;
  if (!generative)
    report = hais::analysis_log_likelihood(*model.analysis, data, cfg);
  else if (model.linear)
    report = hais::generative_log_likelihood(*model.linear, data, cfg);
  else
    report = hais::generative_log_likelihood(*model.bilinear, data, cfg);

  const fs::path out_dir = ensure_out_dir(opts.out_dir);
  {
    std::ofstream os(out_dir / "report.csv");
    hais::write_likelihood_csv(os, report);
    manifest.add_output(out_dir / "report.csv");
  }
  {
    std::ofstream os(out_dir / "report.json");
    hais::write_likelihood_json(os, report, model.type);
    manifest.add_output(out_dir / "report.json");
  }
  manifest.write(out_dir);

  print_kv("mean_ll", report.mean_ll);
  print_kv("std_err", report.std_err);
  if (report.log_z) print_kv("log_z", *report.log_z);
  std::printf("n_points %d\n", static_cast<int>(report.per_point.size()));
  if (!report.failed_indices.empty()) {
    std::fprintf(stderr, "%zu datapoint(s) failed:\n", report.failed_indices.size());
    for (std::size_t i = 0; i < report.failed_indices.size(); ++i)
      std::fprintf(stderr, "  point %d: %s\n", report.failed_indices[i],
                   report.failures[i].c_str());
  }
  return report.n_succeeded() == 0 ? 1 : 0;
}

int cmd_sweep(const std::string& model_path, const CommonOpts& opts,
              const std::vector<int>& n_list, const std::vector<std::string>& estimator_names,
              int repeats, bool svg) {
  const hais::HaisConfig base = to_config(opts);
  hais::LoadedModel model = hais::load_model(model_path);
  if (model.is_generative())
    throw hais::InputError(model_path + ": sweeps need a directly evaluable (analysis) model");
  const hais::EnergyModel& target = *model.analysis;
  hais::GaussianReference proposal = hais::GaussianReference::matching(target);

  std::vector<hais::Estimator> estimators;
  for (const auto& name : estimator_names) estimators.push_back(estimator_from_name(name));

  Manifest manifest("sweep", config_json(base));
  manifest.doc["config"]["n_list"] = n_list;
  manifest.doc["config"]["estimators"] = estimator_names;
  manifest.doc["config"]["repeats"] = repeats;
  manifest.add_input(model_path);

  auto rows = hais::convergence_sweep(proposal, target, n_list, estimators, repeats, base);

  const fs::path out_dir = ensure_out_dir(opts.out_dir);
  {
    std::ofstream os(out_dir / "sweep.csv");
    hais::write_sweep_csv(os, rows);
    manifest.add_output(out_dir / "sweep.csv");
  }
  hais::write_sweep_csv(std::cout, rows);
  if (svg) {
    hais::SweepPlotOptions plot;
    plot.truth = target.analytic_log_z();
    std::ofstream os(out_dir / "sweep.svg");
    os << hais::render_sweep_svg(rows, plot);
    manifest.add_output(out_dir / "sweep.svg");
  }
  manifest.write(out_dir);
  return 0;
}

int cmd_preprocess(const std::vector<std::string>& inputs, const CommonOpts& opts,
                   int components, int patch_edge, int n_patches, bool no_log,
                   const std::string& apply_transform, const std::string& format) {
  if (format != "binary" && format != "text")
    throw hais::InputError("--format must be \"binary\" or \"text\"");

  json cfg;
  cfg["seed"] = opts.seed;
  cfg["components"] = components;
  cfg["patch_edge"] = patch_edge;
  cfg["n_patches"] = n_patches;
  cfg["apply_log"] = !no_log;
  cfg["format"] = format;
  if (!apply_transform.empty()) cfg["apply_transform"] = apply_transform;
  Manifest manifest("preprocess", cfg);

  std::vector<Eigen::MatrixXd> images;
  std::vector<Eigen::MatrixXd> matrices;
  for (const auto& input : inputs) {
    manifest.add_input(input);
    if (fs::path(input).extension() == ".pgm")
      images.push_back(hais::read_pgm(input));
    else
      matrices.push_back(hais::read_matrix(input));
  }
  if (!images.empty() && !matrices.empty())
    throw hais::InputError("cannot mix image and matrix inputs in one run");

  Eigen::MatrixXd data;
  if (!images.empty()) {
    if (n_patches < 1) throw hais::InputError("image inputs need --n-patches >= 1");
    hais::PatchConfig pc{patch_edge, n_patches, !no_log};
    hais::RandomStream rng(opts.seed);
    data = hais::extract_patches(images, pc, rng);
  } else {
    if (matrices.empty()) throw hais::InputError("no inputs given");
    Eigen::Index cols = matrices.front().cols(), rows = 0;
    for (const auto& m : matrices) {
      if (m.cols() != cols) throw hais::InputError("matrix inputs disagree on column count");
      rows += m.rows();
    }
    data.resize(rows, cols);
    Eigen::Index at = 0;
    for (const auto& m : matrices) {
      data.middleRows(at, m.rows()) = m;
      at += m.rows();
    }
  }

  const fs::path out_dir = ensure_out_dir(opts.out_dir);
  hais::WhitenTransform transform;
  if (apply_transform.empty()) {
    if (components < 1) throw hais::InputError("fitting needs --components >= 1");
    transform = hais::fit_whiten(data, components);
    hais::save_transform(out_dir / "transform.json", transform);
    manifest.add_output(out_dir / "transform.json");
  } else {
    transform = hais::load_transform(apply_transform);
  }

  Eigen::MatrixXd whitened = hais::apply_whiten(transform, data);
  const fs::path data_out = out_dir / (format == "binary" ? "whitened.mat" : "whitened.txt");
  hais::write_matrix(data_out, whitened, format == "binary");
  manifest.add_output(data_out);
  manifest.write(out_dir);

  Eigen::VectorXd mean = whitened.colwise().mean();
  Eigen::VectorXd var = ((whitened.rowwise() - mean.transpose()).array().square().colwise().sum() /
                         std::max<double>(1.0, static_cast<double>(whitened.rows())))
                            .matrix();
  std::printf("rows %lld\ncomponents %lld\n", static_cast<long long>(whitened.rows()),
              static_cast<long long>(whitened.cols()));
  print_kv("variance_min", var.minCoeff());
  print_kv("variance_max", var.maxCoeff());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Partition functions and test-set log likelihoods of continuous "
               "energy-based models via annealed importance sampling with Hamiltonian "
               "transitions"};
  app.require_subcommand(1);
  app.set_version_flag("--version", hais::kVersion);

  CommonOpts est_opts, ll_opts, sweep_opts, pre_opts;

  auto* estimate = app.add_subcommand("estimate", "estimate log Z of a model file");
  std::string est_model, est_particles_out;
  estimate->add_option("model", est_model, "model JSON file")->required();
  estimate->add_option("--particles-out", est_particles_out, "write per-particle log weights CSV");
  add_common(estimate, est_opts);

  auto* loglik = app.add_subcommand("loglik", "average test-set log likelihood");
  std::string ll_model, ll_data;
  bool ll_generative = false;
  loglik->add_option("model", ll_model, "model JSON file")->required();
  loglik->add_option("data", ll_data, "data matrix (rows = datapoints)")->required();
  loglik->add_flag("--generative", ll_generative, "one annealing chain per datapoint");
  add_common(loglik, ll_opts);

  auto* sweep = app.add_subcommand("sweep", "estimator convergence versus N");
  std::string sweep_model;
  std::vector<int> sweep_n_list;
  std::vector<std::string> sweep_estimators{"hais"};
  int sweep_repeats = 1;
  bool sweep_svg = false;
  sweep->add_option("model", sweep_model, "model JSON file")->required();
  sweep->add_option("--n-list", sweep_n_list, "N values to sweep")->required()->expected(-1);
  sweep->add_option("--estimators", sweep_estimators, "estimators to compare")->expected(-1);
  sweep->add_option("--repeats", sweep_repeats, "repeats per (N, estimator) cell");
  sweep->add_flag("--svg", sweep_svg, "also render sweep.svg");
  add_common(sweep, sweep_opts);

  auto* preprocess = app.add_subcommand("preprocess", "log / mean-subtract / PCA-whiten");
  std::vector<std::string> pre_inputs;
  int pre_components = 0, pre_patch_edge = 16, pre_n_patches = 0;
  bool pre_no_log = false;
  std::string pre_apply, pre_format = "binary";
  preprocess->add_option("inputs", pre_inputs, "PGM images or matrix files")->required();
  preprocess->add_option("--components", pre_components, "PCA components to keep");
  preprocess->add_option("--patch-edge", pre_patch_edge, "patch edge in pixels (default 16)");
  preprocess->add_option("--n-patches", pre_n_patches, "patches to draw from images");
  preprocess->add_flag("--no-log", pre_no_log, "skip the log step");
  preprocess->add_option("--apply-transform", pre_apply, "reuse a fitted transform JSON");
  preprocess->add_option("--format", pre_format, "output data format: binary | text");
  add_common(preprocess, pre_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (estimate->parsed()) return cmd_estimate(est_model, est_opts, est_particles_out);
    if (loglik->parsed()) return cmd_loglik(ll_model, ll_data, ll_opts, ll_generative);
    if (sweep->parsed())
      return cmd_sweep(sweep_model, sweep_opts, sweep_n_list, sweep_estimators, sweep_repeats,
                       sweep_svg);
    if (preprocess->parsed())
      return cmd_preprocess(pre_inputs, pre_opts, pre_components, pre_patch_edge, pre_n_patches,
                            pre_no_log, pre_apply, pre_format);
  } catch (const hais::NonFiniteDynamics& e) {
    std::fprintf(stderr, "error: %s (beta=%.6g, particle=%d)\n", e.what(), e.beta, e.particle);
    return 1;
  } catch (const hais::InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const hais::ContractViolation& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
