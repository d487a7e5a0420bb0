#include "hypml/checkpoint.hpp"

#include "hypml/error.hpp"

#include <json.hpp>

#include <array>
#include <bit>
#include <fstream>

namespace hypml::training {
namespace {

using nlohmann::json;

constexpr std::array<char, 4> kMagic{'H', 'Y', 'P', 'C'};

void put_u16(std::ostream& out, std::uint16_t v) {
  const char bytes[2] = {static_cast<char>(v & 0xFF), static_cast<char>(v >> 8)};
  out.write(bytes, 2);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(bytes, 4);
}

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(bytes, 8);
}

std::uint64_t get_le(std::istream& in, int width) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), width);
  require(in.gcount() == width, ErrorKind::Data, "truncated checkpoint");
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

json spec_to_json(const ModelSpec& spec) {
  json enc;
  if (const auto* mlp = std::get_if<encoder::MlpSpec>(&spec.encoder)) {
    enc = {{"type", "mlp"},
           {"input_dim", mlp->input_dim},
           {"hidden", mlp->hidden},
           {"output_dim", mlp->output_dim},
           {"activation", std::string(encoder::to_string(mlp->activation))}};
  } else {
    const auto& vit = std::get<encoder::VitSpec>(spec.encoder);
    enc = {{"type", "vit"},
           {"image_size", vit.image_size},
           {"patch_size", vit.patch_size},
           {"channels", vit.channels},
           {"width", vit.width},
           {"depth", vit.depth},
           {"heads", vit.heads},
           {"mlp_width", vit.mlp_width},
           {"freeze_patch_projection", vit.freeze_patch_projection}};
  }
  return {{"encoder", enc}, {"head_dim", spec.head_dim}};
}

ModelSpec spec_from_json(const json& j) {
  ModelSpec spec;
  const json& enc = j.at("encoder");
  if (enc.at("type") == "mlp") {
    encoder::MlpSpec mlp;
    mlp.input_dim = enc.at("input_dim");
    mlp.hidden = enc.at("hidden").get<std::vector<Index>>();
    mlp.output_dim = enc.at("output_dim");
    mlp.activation = encoder::parse_activation(enc.at("activation").get<std::string>());
    spec.encoder = mlp;
  } else {
    encoder::VitSpec vit;
    vit.image_size = enc.at("image_size");
    vit.patch_size = enc.at("patch_size");
    vit.channels = enc.at("channels");
    vit.width = enc.at("width");
    vit.depth = enc.at("depth");
    vit.heads = enc.at("heads");
    vit.mlp_width = enc.at("mlp_width");
    vit.freeze_patch_projection = enc.at("freeze_patch_projection");
    spec.encoder = vit;
  }
  spec.head_dim = j.at("head_dim");
  return spec;
}

// Doubles are stored by bit pattern so the manifest round-trips exactly.
json exact(double v) { return std::bit_cast<std::uint64_t>(v); }
double exact(const json& j) { return std::bit_cast<double>(j.get<std::uint64_t>()); }

json config_to_json(const TrainConfig& cfg) {
  return {{"lr", exact(cfg.lr)},
          {"weight_decay", exact(cfg.weight_decay)},
          {"steps", cfg.steps},
          {"batch_classes", cfg.batch_classes},
          {"samples_per_class", cfg.samples_per_class},
          {"grad_clip_norm", exact(cfg.grad_clip_norm)},
          {"seed", cfg.seed},
          {"augment", cfg.augment},
          {"loss",
           {{"metric", std::string(loss::to_string(cfg.loss.metric))},
            {"tau", exact(cfg.loss.tau)},
            {"curvature", exact(cfg.loss.curvature)},
            {"clip_radius", exact(cfg.loss.clip_radius)}}}};
}

TrainConfig config_from_json(const json& j) {
  TrainConfig cfg;
  cfg.lr = exact(j.at("lr"));
  cfg.weight_decay = exact(j.at("weight_decay"));
  cfg.steps = j.at("steps");
  cfg.batch_classes = j.at("batch_classes");
  cfg.samples_per_class = j.at("samples_per_class");
  cfg.grad_clip_norm = exact(j.at("grad_clip_norm"));
  cfg.seed = j.at("seed");
  cfg.augment = j.at("augment");
  const json& l = j.at("loss");
  cfg.loss.metric = loss::parse_metric(l.at("metric").get<std::string>());
  cfg.loss.tau = exact(l.at("tau"));
  cfg.loss.curvature = exact(l.at("curvature"));
  cfg.loss.clip_radius = exact(l.at("clip_radius"));
  return cfg;
}

void put_tensor(std::ostream& out, const std::string& name, const Matrix& m) {
  put_u16(out, static_cast<std::uint16_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (Index i = 0; i < m.size(); ++i) put_f64(out, m.data()[i]);
}

}  // namespace

void write_checkpoint(std::ostream& out, const ModelState& state, const CheckpointInfo& info) {
  const AdamWConfig& hp = state.optimizer.hp;
  json manifest = {{"format", "hypml-checkpoint"},
                   {"config_hash", info.config_hash},
                   {"step", state.step},
                   {"model", spec_to_json(state.model.spec())},
                   {"train", config_to_json(state.config)},
                   {"rng", state.rng.state()},
                   {"optimizer",
                    {{"step", state.optimizer.step},
                     {"lr", exact(hp.lr)},
                     {"weight_decay", exact(hp.weight_decay)},
                     {"beta1", exact(hp.beta1)},
                     {"beta2", exact(hp.beta2)},
                     {"eps", exact(hp.eps)}}},
                   {"metrics", info.metrics}};
  const std::string text = manifest.dump();

  out.write(kMagic.data(), kMagic.size());
  put_u16(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));

  const auto params = state.model.parameters();
  put_u32(out, static_cast<std::uint32_t>(3 * params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    put_tensor(out, "param/" + params[i]->name, params[i]->value);
    put_tensor(out, "adam.m/" + params[i]->name, state.optimizer.first_moment[i]);
    put_tensor(out, "adam.v/" + params[i]->name, state.optimizer.second_moment[i]);
  }
}

ModelState read_checkpoint(std::istream& in, CheckpointInfo* info) {
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  require(in.gcount() == 4 && magic == kMagic, ErrorKind::Data, "not a hypml checkpoint");
  const auto version = static_cast<std::uint16_t>(get_le(in, 2));
  require(version == kCheckpointVersion, ErrorKind::Data, "unsupported checkpoint version");
  const auto manifest_size = static_cast<std::size_t>(get_le(in, 4));
  std::string text(manifest_size, '\0');
  in.read(text.data(), static_cast<std::streamsize>(manifest_size));
  require(static_cast<std::size_t>(in.gcount()) == manifest_size, ErrorKind::Data, "truncated checkpoint manifest");

  json manifest;
  try {
    manifest = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::Data, std::string("corrupt checkpoint manifest: ") + e.what());
  }

  try {
    const ModelSpec spec = spec_from_json(manifest.at("model"));
    const TrainConfig config = config_from_json(manifest.at("train"));
    Rng scratch(0);
    ModelState state{Model(spec, scratch), {}, config, Rng(0), manifest.at("step").get<std::uint64_t>()};
    state.rng.restore(manifest.at("rng").get<std::string>());

    const json& opt = manifest.at("optimizer");
    AdamWConfig hp{exact(opt.at("lr")), exact(opt.at("weight_decay")), exact(opt.at("beta1")),
                   exact(opt.at("beta2")), exact(opt.at("eps"))};
    const auto params = state.model.parameters();
    state.optimizer = OptimizerState::for_parameters(std::as_const(state.model).parameters(), hp);
    state.optimizer.step = opt.at("step");

    std::map<std::string, Matrix*> slots;
    for (std::size_t i = 0; i < params.size(); ++i) {
      slots["param/" + params[i]->name] = &params[i]->value;
      slots["adam.m/" + params[i]->name] = &state.optimizer.first_moment[i];
      slots["adam.v/" + params[i]->name] = &state.optimizer.second_moment[i];
    }

    const auto count = static_cast<std::size_t>(get_le(in, 4));
    require(count == slots.size(), ErrorKind::Data, "checkpoint tensor count does not match the model");
    for (std::size_t t = 0; t < count; ++t) {
      const auto name_size = static_cast<std::size_t>(get_le(in, 2));
      std::string name(name_size, '\0');
      in.read(name.data(), static_cast<std::streamsize>(name_size));
      require(static_cast<std::size_t>(in.gcount()) == name_size, ErrorKind::Data, "truncated tensor name");
      const auto it = slots.find(name);
      require(it != slots.end(), ErrorKind::Data, "unexpected tensor '" + name + "' in checkpoint");
      const auto rows = static_cast<Index>(get_le(in, 4));
      const auto cols = static_cast<Index>(get_le(in, 4));
      Matrix& target = *it->second;
      require(rows == target.rows() && cols == target.cols(), ErrorKind::Data,
              "tensor '" + name + "' has the wrong shape");
      for (Index i = 0; i < target.size(); ++i) target.data()[i] = std::bit_cast<double>(get_le(in, 8));
      slots.erase(it);
    }

    if (info != nullptr) {
      info->config_hash = manifest.at("config_hash").get<std::string>();
      info->metrics = manifest.at("metrics").get<std::map<std::string, double>>();
    }
    return state;
  } catch (const json::exception& e) {
    fail(ErrorKind::Data, std::string("incomplete checkpoint manifest: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const ModelState& state, const CheckpointInfo& info) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.is_open(), ErrorKind::Data, "cannot open '" + path.string() + "' for writing");
  write_checkpoint(out, state, info);
  out.flush();
  require(out.good(), ErrorKind::Data, "failed writing checkpoint '" + path.string() + "'");
}

ModelState load_checkpoint(const std::filesystem::path& path, CheckpointInfo* info) {
  std::ifstream in(path, std::ios::binary);
  require(in.is_open(), ErrorKind::Data, "cannot open checkpoint '" + path.string() + "'");
  return read_checkpoint(in, info);
}

}  // namespace hypml::training
