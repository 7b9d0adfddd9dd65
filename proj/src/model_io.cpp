#include "hais/model_io.hpp"

#include <fstream>

#include "hais/errors.hpp"

namespace hais {

namespace {

using nlohmann::json;

[[noreturn]] void missing_field(const std::string& origin, const std::string& field) {
  throw InputError(origin + ": missing or malformed field '" + field + "'");
}

double get_number(const json& j, const std::string& origin, const std::string& field) {
  if (!j.contains(field) || !j[field].is_number()) missing_field(origin, field);
  return j[field].get<double>();
}

std::string get_string(const json& j, const std::string& origin, const std::string& field) {
  if (!j.contains(field) || !j[field].is_string()) missing_field(origin, field);
  return j[field].get<std::string>();
}

Eigen::VectorXd get_vector(const json& j, const std::string& origin, const std::string& field) {
  if (!j.contains(field) || !j[field].is_array()) missing_field(origin, field);
  const auto& arr = j[field];
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) missing_field(origin, field);
    v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  return v;
}

/// Matrices are nested arrays, row-major: [[row0...], [row1...], ...].
Eigen::MatrixXd get_matrix(const json& j, const std::string& origin, const std::string& field) {
  if (!j.contains(field) || !j[field].is_array() || j[field].empty()) missing_field(origin, field);
  const auto& arr = j[field];
  if (!arr[0].is_array() || arr[0].empty()) missing_field(origin, field);
  const std::size_t cols = arr[0].size();
  Eigen::MatrixXd m(arr.size(), cols);
  for (std::size_t r = 0; r < arr.size(); ++r) {
    if (!arr[r].is_array() || arr[r].size() != cols)
      throw InputError(origin + ": field '" + field + "' has ragged rows");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!arr[r][c].is_number()) missing_field(origin, field);
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = arr[r][c].get<double>();
    }
  }
  return m;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Prior parse_prior(const std::string& s, const std::string& origin) {
  if (s == "gaussian") return Prior::kGaussian;
  if (s == "laplace") return Prior::kLaplace;
  throw InputError(origin + ": field 'prior' must be \"gaussian\" or \"laplace\"");
}

Expert parse_expert(const std::string& s, const std::string& origin) {
  if (s == "laplace") return Expert::kLaplace;
  if (s == "student_t") return Expert::kStudentT;
  throw InputError(origin + ": field 'expert' must be \"laplace\" or \"student_t\"");
}

}  // namespace

int LoadedModel::data_dim() const {
  if (analysis) return analysis->dim();
  if (linear) return linear->data_dim();
  if (bilinear) return bilinear->data_dim();
  return 0;
}

LoadedModel model_from_json(const json& j, const std::string& origin) {
  const std::string type = get_string(j, origin, "model_type");
  LoadedModel out;
  out.type = type;
  try {
    if (type == "gaussian_reference") {
      const int dim = static_cast<int>(get_number(j, origin, "dim"));
      Eigen::VectorXd scale;
      if (j.contains("scale") && j["scale"].is_array())
        scale = get_vector(j, origin, "scale");
      else if (j.contains("scale"))
        scale = Eigen::VectorXd::Constant(dim, get_number(j, origin, "scale"));
      else
        scale = Eigen::VectorXd::Ones(dim);
      out.analysis = std::make_unique<GaussianReference>(dim, std::move(scale));
    } else if (type == "poe") {
      Eigen::MatrixXd phi = get_matrix(j, origin, "phi");
      const Expert expert = parse_expert(get_string(j, origin, "expert"), origin);
      Eigen::VectorXd lambda = j.contains("lambda") ? get_vector(j, origin, "lambda")
                                                    : Eigen::VectorXd::Ones(phi.rows());
      out.analysis = std::make_unique<PoeModel>(std::move(phi), std::move(lambda), expert);
    } else if (type == "mcrbm") {
      out.analysis = std::make_unique<McRbm>(
          get_matrix(j, origin, "p"), get_matrix(j, origin, "c"), get_matrix(j, origin, "w"),
          get_vector(j, origin, "b_m"), get_vector(j, origin, "b_c"), get_vector(j, origin, "b_v"),
          get_number(j, origin, "sigma"));
    } else if (type == "linear_generative") {
      LinearGenerative gen;
      gen.phi = get_matrix(j, origin, "phi");
      gen.sigma_n = get_number(j, origin, "sigma_n");
      gen.prior = parse_prior(get_string(j, origin, "prior"), origin);
      gen.validate();
      out.linear = std::move(gen);
    } else if (type == "bilinear_generative") {
      BilinearGenerative gen;
      gen.phi = get_matrix(j, origin, "phi");
      gen.theta = get_matrix(j, origin, "theta");
      gen.psi = get_matrix(j, origin, "psi");
      gen.sigma_n = get_number(j, origin, "sigma_n");
      gen.validate();
      out.bilinear = std::move(gen);
    } else {
      throw InputError(origin + ": unknown model_type \"" + type + "\"");
    }
  } catch (const ContractViolation& e) {
    throw InputError(origin + ": " + e.what());
  }
  return out;
}

LoadedModel load_model(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError(path.string() + ": cannot open");
  json j;
  try {
    is >> j;
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": JSON parse error: " + e.what());
  }
  return model_from_json(j, path.string());
}

json model_to_json(const GaussianReference& m) {
  json j;
  j["model_type"] = "gaussian_reference";
  j["dim"] = m.dim();
  j["scale"] = vector_to_json(m.scale());
  return j;
}

json model_to_json(const PoeModel& m) {
  json j;
  j["model_type"] = "poe";
  j["expert"] = m.expert() == Expert::kLaplace ? "laplace" : "student_t";
  j["phi"] = matrix_to_json(m.phi());
  j["lambda"] = vector_to_json(m.lambda());
  return j;
}

json model_to_json(const McRbm& m) {
  json j;
  j["model_type"] = "mcrbm";
  j["p"] = matrix_to_json(m.p_mat());
  j["c"] = matrix_to_json(m.c_mat());
  j["w"] = matrix_to_json(m.w_mat());
  j["b_m"] = vector_to_json(m.b_m());
  j["b_c"] = vector_to_json(m.b_c());
  j["b_v"] = vector_to_json(m.b_v());
  j["sigma"] = m.sigma();
  return j;
}

json model_to_json(const LinearGenerative& m) {
  json j;
  j["model_type"] = "linear_generative";
  j["prior"] = m.prior == Prior::kGaussian ? "gaussian" : "laplace";
  j["phi"] = matrix_to_json(m.phi);
  j["sigma_n"] = m.sigma_n;
  return j;
}

json model_to_json(const BilinearGenerative& m) {
  json j;
  j["model_type"] = "bilinear_generative";
  j["phi"] = matrix_to_json(m.phi);
  j["theta"] = matrix_to_json(m.theta);
  j["psi"] = matrix_to_json(m.psi);
  j["sigma_n"] = m.sigma_n;
  return j;
}

json transform_to_json(const WhitenTransform& t) {
  json j;
  j["mean"] = vector_to_json(t.mean);
  j["basis"] = matrix_to_json(t.basis);
  j["scales"] = vector_to_json(t.scales);
  return j;
}

WhitenTransform transform_from_json(const json& j, const std::string& origin) {
  WhitenTransform t;
  t.mean = get_vector(j, origin, "mean");
  t.basis = get_matrix(j, origin, "basis");
  t.scales = get_vector(j, origin, "scales");
  if (t.basis.cols() != t.mean.size() || t.basis.rows() != t.scales.size())
    throw InputError(origin + ": inconsistent transform dimensions");
  return t;
}

WhitenTransform load_transform(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError(path.string() + ": cannot open");
  json j;
  try {
    is >> j;
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": JSON parse error: " + e.what());
  }
  return transform_from_json(j, path.string());
}

void save_transform(const std::filesystem::path& path, const WhitenTransform& t) {
  std::ofstream os(path);
  if (!os) throw InputError(path.string() + ": cannot open for writing");
  os << transform_to_json(t).dump(2) << "\n";
}

}  // namespace hais
