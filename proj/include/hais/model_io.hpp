#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "hais/models.hpp"
#include "hais/whiten.hpp"

namespace hais {

/// A model parameter file, any of the five supported `model_type` values.
/// Analysis types (gaussian_reference, poe, mcrbm) come back as a ready
/// EnergyModel; generative types carry their parameter structs and get their
/// per-datapoint posterior models built downstream.
struct LoadedModel {
  std::string type;
  std::unique_ptr<EnergyModel> analysis;
  std::optional<LinearGenerative> linear;
  std::optional<BilinearGenerative> bilinear;

  bool is_generative() const { return linear.has_value() || bilinear.has_value(); }
  int data_dim() const;
};

LoadedModel load_model(const std::filesystem::path& path);
LoadedModel model_from_json(const nlohmann::json& j, const std::string& origin);

nlohmann::json model_to_json(const GaussianReference& m);
nlohmann::json model_to_json(const PoeModel& m);
nlohmann::json model_to_json(const McRbm& m);
nlohmann::json model_to_json(const LinearGenerative& m);
nlohmann::json model_to_json(const BilinearGenerative& m);

nlohmann::json transform_to_json(const WhitenTransform& t);
WhitenTransform transform_from_json(const nlohmann::json& j, const std::string& origin);
WhitenTransform load_transform(const std::filesystem::path& path);
void save_transform(const std::filesystem::path& path, const WhitenTransform& t);

}  // namespace hais
