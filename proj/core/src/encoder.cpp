#include "hypml/encoder.hpp"

#include "hypml/error.hpp"

namespace hypml::encoder {

std::string_view to_string(Activation a) noexcept {
  return a == Activation::GeluTanh ? "gelu_tanh" : "none";
}

Activation parse_activation(std::string_view name) {
  if (name == "gelu_tanh" || name == "gelu") return Activation::GeluTanh;
  if (name == "none" || name == "identity") return Activation::None;
  fail(ErrorKind::Config, "unknown activation '" + std::string(name) + "'");
}

Index input_dim(const EncoderSpec& spec) {
  return std::visit(
      [](const auto& s) -> Index {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, MlpSpec>) {
          return s.input_dim;
        } else {
          return s.input_dim();
        }
      },
      spec);
}

Index output_dim(const EncoderSpec& spec) {
  return std::visit(
      [](const auto& s) -> Index {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, MlpSpec>) {
          return s.output_dim;
        } else {
          return s.width;
        }
      },
      spec);
}

void validate(const EncoderSpec& spec) {
  if (const auto* mlp = std::get_if<MlpSpec>(&spec)) {
    require(mlp->input_dim > 0 && mlp->output_dim > 0, ErrorKind::Config,
            "mlp dimensions must be positive");
    for (Index h : mlp->hidden) require(h > 0, ErrorKind::Config, "mlp hidden widths must be positive");
    return;
  }
  const auto& vit = std::get<VitSpec>(spec);
  require(vit.image_size > 0 && vit.patch_size > 0 && vit.channels > 0, ErrorKind::Config,
          "vit image, patch and channel sizes must be positive");
  require(vit.image_size % vit.patch_size == 0, ErrorKind::Config,
          "vit image side must be divisible by the patch side");
  require(vit.width > 0 && vit.heads > 0 && vit.width % vit.heads == 0, ErrorKind::Config,
          "vit width must be a positive multiple of the head count");
  require(vit.depth >= 0 && vit.mlp_width > 0, ErrorKind::Config, "invalid vit depth or mlp width");
}

Matrix Encoder::forward(const Matrix& inputs) const {
  std::unique_ptr<Cache> unused;
  return forward(inputs, unused);
}

std::unique_ptr<Encoder> make_encoder(const EncoderSpec& spec, Rng& rng) {
  validate(spec);
  if (const auto* mlp = std::get_if<MlpSpec>(&spec)) return std::make_unique<MlpEncoder>(*mlp, rng);
  return std::make_unique<MicroVit>(std::get<VitSpec>(spec), rng);
}

}  // namespace hypml::encoder
