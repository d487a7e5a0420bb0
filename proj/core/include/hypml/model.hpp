#pragma once

#include "hypml/encoder.hpp"

#include <memory>
#include <vector>

namespace hypml {

struct ModelSpec {
  encoder::EncoderSpec encoder = encoder::MlpSpec{};
  Index head_dim = 128;
};

/// Encoder followed by the projection head. Parameters are exposed as one
/// flat list: encoder parameters first, then the head's.
class Model {
 public:
  Model(ModelSpec spec, Rng& rng);
  Model(const Model& other);
  Model& operator=(const Model& other);
  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;

  const ModelSpec& spec() const noexcept { return spec_; }
  encoder::Encoder& encoder() { return *encoder_; }
  const encoder::Encoder& encoder() const { return *encoder_; }
  encoder::ProjectionHead& head() { return head_; }
  const encoder::ProjectionHead& head() const { return head_; }

  /// Encoder outputs for each input row.
  Matrix encode(const Matrix& inputs) const;
  /// Head outputs (Euclidean, before any clipping or exponential map).
  Matrix project(const Matrix& inputs) const;

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  Gradients zero_gradients() const;

  struct Pass {
    Matrix features;
    Matrix head_out;
    std::unique_ptr<encoder::Cache> cache;
  };
  Pass forward(const Matrix& inputs) const;
  /// Parameter gradients for d loss / d head_out, aligned with parameters().
  Gradients backward(const Pass& pass, const Matrix& d_head_out) const;

 private:
  ModelSpec spec_;
  std::unique_ptr<encoder::Encoder> encoder_;
  encoder::ProjectionHead head_;
};

}  // namespace hypml
