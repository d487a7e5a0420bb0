#include "run_config.hpp"

#include "hypml/error.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace hypmetric {
namespace {

using hypml::ErrorKind;
using hypml::fail;
using hypml::require;
using nlohmann::json;

/// Object view that remembers which keys were read so leftovers can be rejected.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    require(node_.is_object(), ErrorKind::Config, where() + " must be an object");
  }

  template <typename T>
  std::optional<T> get(const std::string& key) {
    seen_.insert(key);
    const auto it = node_.find(key);
    if (it == node_.end()) return std::nullopt;
    try {
      return it->template get<T>();
    } catch (const json::exception&) {
      fail(ErrorKind::Config, "config key " + where(key) + " has the wrong type");
    }
  }

  template <typename T>
  void read(const std::string& key, T& target) {
    if (auto v = get<T>(key)) target = *v;
  }

  std::optional<Section> child(const std::string& key) {
    seen_.insert(key);
    const auto it = node_.find(key);
    if (it == node_.end()) return std::nullopt;
    return Section(*it, where(key));
  }

  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      require(seen_.count(key) != 0, ErrorKind::Config, "unknown config key " + where(key));
    }
  }

 private:
  std::string where() const { return path_.empty() ? "<root>" : path_; }
  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

hypml::encoder::EncoderSpec encoder_of_type(const std::string& type) {
  if (type == "mlp") return hypml::encoder::MlpSpec{};
  if (type == "vit") return hypml::encoder::VitSpec{};
  fail(ErrorKind::Config, "unknown encoder type '" + type + "' (expected mlp or vit)");
}

void read_encoder(Section& s, hypml::encoder::EncoderSpec& spec) {
  const std::string type = s.get<std::string>("type").value_or("mlp");
  spec = encoder_of_type(type);
  if (auto* mlp = std::get_if<hypml::encoder::MlpSpec>(&spec)) {
    s.read("hidden", mlp->hidden);
    s.read("output_dim", mlp->output_dim);
    if (auto act = s.get<std::string>("activation")) mlp->activation = hypml::encoder::parse_activation(*act);
  } else {
    auto& vit = std::get<hypml::encoder::VitSpec>(spec);
    s.read("image_size", vit.image_size);
    s.read("patch_size", vit.patch_size);
    s.read("channels", vit.channels);
    s.read("width", vit.width);
    s.read("depth", vit.depth);
    s.read("heads", vit.heads);
    s.read("mlp_width", vit.mlp_width);
    s.read("freeze_patch_projection", vit.freeze_patch_projection);
  }
  s.finish();
}

json encoder_json(const hypml::encoder::EncoderSpec& spec) {
  if (const auto* mlp = std::get_if<hypml::encoder::MlpSpec>(&spec)) {
    return {{"type", "mlp"},
            {"hidden", mlp->hidden},
            {"output_dim", mlp->output_dim},
            {"activation", std::string(hypml::encoder::to_string(mlp->activation))}};
  }
  const auto& vit = std::get<hypml::encoder::VitSpec>(spec);
  return {{"type", "vit"},          {"image_size", vit.image_size}, {"patch_size", vit.patch_size},
          {"channels", vit.channels}, {"width", vit.width},           {"depth", vit.depth},
          {"heads", vit.heads},       {"mlp_width", vit.mlp_width},
          {"freeze_patch_projection", vit.freeze_patch_projection}};
}

bool is_type(const hypml::encoder::EncoderSpec& spec, const std::string& type) {
  return (type == "mlp") == std::holds_alternative<hypml::encoder::MlpSpec>(spec);
}

}  // namespace

RunConfig parse_run_config(const json& doc, const Overrides& ov) {
  RunConfig cfg;
  std::optional<double> tau;

  Section root(doc, "");
  root.read("data", cfg.data);
  root.read("out", cfg.out);
  root.read("head_dim", cfg.model.head_dim);
  if (auto enc = root.child("encoder")) read_encoder(*enc, cfg.model.encoder);
  if (auto loss = root.child("loss")) {
    if (auto m = loss->get<std::string>("metric")) cfg.train.loss.metric = hypml::loss::parse_metric(*m);
    tau = loss->get<double>("tau");
    loss->read("c", cfg.train.loss.curvature);
    loss->read("r", cfg.train.loss.clip_radius);
    loss->finish();
  }
  if (auto train = root.child("train")) {
    train->read("lr", cfg.train.lr);
    train->read("weight_decay", cfg.train.weight_decay);
    train->read("steps", cfg.train.steps);
    train->read("batch_classes", cfg.train.batch_classes);
    train->read("samples_per_class", cfg.train.samples_per_class);
    train->read("grad_clip_norm", cfg.train.grad_clip_norm);
    train->read("seed", cfg.train.seed);
    train->read("augment", cfg.train.augment);
    train->finish();
  }
  if (auto eval = root.child("eval")) {
    eval->read("ks", cfg.ks);
    eval->finish();
  }
  root.finish();

  if (ov.data) cfg.data = *ov.data;
  if (ov.out) cfg.out = *ov.out;
  if (ov.encoder && !is_type(cfg.model.encoder, *ov.encoder)) cfg.model.encoder = encoder_of_type(*ov.encoder);
  if (ov.head_dim) cfg.model.head_dim = *ov.head_dim;
  if (ov.metric) cfg.train.loss.metric = hypml::loss::parse_metric(*ov.metric);
  if (ov.tau) tau = ov.tau;
  if (ov.curvature) cfg.train.loss.curvature = *ov.curvature;
  if (ov.clip_radius) cfg.train.loss.clip_radius = *ov.clip_radius;
  if (ov.lr) cfg.train.lr = *ov.lr;
  if (ov.weight_decay) cfg.train.weight_decay = *ov.weight_decay;
  if (ov.grad_clip) cfg.train.grad_clip_norm = *ov.grad_clip;
  if (ov.steps) cfg.train.steps = *ov.steps;
  if (ov.seed) cfg.train.seed = *ov.seed;
  if (ov.batch_classes) cfg.train.batch_classes = *ov.batch_classes;
  if (ov.samples_per_class) cfg.train.samples_per_class = *ov.samples_per_class;
  if (ov.augment) cfg.train.augment = *ov.augment;

  const auto defaults = cfg.train.loss.metric == hypml::loss::Metric::Hyperbolic
                            ? hypml::loss::LossConfig::hyperbolic()
                            : hypml::loss::LossConfig::spherical();
  cfg.train.loss.tau = tau.value_or(defaults.tau);

  cfg.train.validate();
  // The MLP input width comes from the dataset; check the rest of the spec now.
  hypml::encoder::EncoderSpec probe = cfg.model.encoder;
  if (auto* mlp = std::get_if<hypml::encoder::MlpSpec>(&probe)) mlp->input_dim = 1;
  hypml::encoder::validate(probe);
  require(cfg.model.head_dim >= 1, ErrorKind::Config, "head_dim must be positive");
  require(!cfg.ks.empty(), ErrorKind::Config, "eval.ks must not be empty");
  for (int k : cfg.ks) require(k >= 1, ErrorKind::Config, "eval.ks entries must be positive");
  return cfg;
}

RunConfig load_run_config(const std::string& path, const Overrides& overrides) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Config, "cannot open config file " + path);
  json doc;
  try {
    doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Config, "config " + path + ": " + e.what());
  }
  return parse_run_config(doc, overrides);
}

json to_json(const RunConfig& cfg) {
  const auto& t = cfg.train;
  return {{"data", cfg.data},
          {"out", cfg.out},
          {"encoder", encoder_json(cfg.model.encoder)},
          {"head_dim", cfg.model.head_dim},
          {"loss",
           {{"metric", std::string(hypml::loss::to_string(t.loss.metric))},
            {"tau", t.loss.tau},
            {"c", t.loss.curvature},
            {"r", t.loss.clip_radius}}},
          {"train",
           {{"lr", t.lr},
            {"weight_decay", t.weight_decay},
            {"steps", t.steps},
            {"batch_classes", t.batch_classes},
            {"samples_per_class", t.samples_per_class},
            {"grad_clip_norm", t.grad_clip_norm},
            {"seed", t.seed},
            {"augment", t.augment}}},
          {"eval", {{"ks", cfg.ks}}}};
}

hypml::ModelSpec resolve_model(const RunConfig& cfg, hypml::Index data_dim) {
  hypml::ModelSpec spec = cfg.model;
  if (auto* mlp = std::get_if<hypml::encoder::MlpSpec>(&spec.encoder)) {
    mlp->input_dim = data_dim;
  } else {
    const auto& vit = std::get<hypml::encoder::VitSpec>(spec.encoder);
    require(vit.input_dim() == data_dim, ErrorKind::Config,
            "vit encoder expects " + std::to_string(vit.input_dim()) + " input values per sample, dataset has " +
                std::to_string(data_dim));
  }
  hypml::encoder::validate(spec.encoder);
  return spec;
}

std::uint64_t fnv1a(const void* bytes, std::size_t size, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string config_hash(const RunConfig& cfg, const hypml::data::VectorDataset& data) {
  json doc = to_json(cfg);
  doc.erase("data");
  doc.erase("out");
  doc["train"].erase("steps");
  doc["eval"].erase("ks");
  const std::string text = doc.dump();
  std::uint64_t h = fnv1a(text.data(), text.size());
  h = fnv1a(data.labels.data(), data.labels.size() * sizeof(hypml::Label), h);
  h = fnv1a(data.features.data(), static_cast<std::size_t>(data.features.size()) * sizeof(double), h);
  const std::int64_t shape[2] = {data.features.rows(), data.features.cols()};
  return hex64(fnv1a(shape, sizeof shape, h));
}

}  // namespace hypmetric
