#pragma once

// Declarative run configuration shared by train, eval, sweep and export.

#include "hypml/dataset.hpp"
#include "hypml/model.hpp"
#include "hypml/training.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace hypmetric {

struct RunConfig {
  std::string data;
  std::string out = "run";
  hypml::ModelSpec model;
  hypml::training::TrainConfig train;
  std::vector<int> ks{1, 2, 4, 8};
};

/// Flag overrides; set fields win over the config document.
struct Overrides {
  std::optional<std::string> data, out, metric, encoder;
  std::optional<double> curvature, tau, clip_radius, lr, weight_decay, grad_clip;
  std::optional<std::uint64_t> steps, seed;
  std::optional<int> batch_classes, samples_per_class;
  std::optional<hypml::Index> head_dim;
  std::optional<bool> augment;
};

/// Parses a config document. Unknown keys and wrong types are Config errors.
/// A missing loss.tau takes the default of the chosen metric.
RunConfig parse_run_config(const nlohmann::json& doc, const Overrides& overrides = {});
RunConfig load_run_config(const std::string& path, const Overrides& overrides = {});

nlohmann::json to_json(const RunConfig& cfg);

/// Fills in the MLP input width from the dataset, or checks it against the ViT input size.
hypml::ModelSpec resolve_model(const RunConfig& cfg, hypml::Index data_dim);

/// 16 hex digits identifying everything that determines a run's results:
/// the config minus step count and paths, plus the dataset contents.
std::string config_hash(const RunConfig& cfg, const hypml::data::VectorDataset& data);

/// FNV-1a, 64 bit.
std::uint64_t fnv1a(const void* bytes, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

}  // namespace hypmetric
