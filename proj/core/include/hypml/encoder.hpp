#pragma once

// Micro-scale feature encoders: a plain MLP over vectors and a small vision
// transformer over single- or multi-channel toy images. Both consume one
// sample per row; there is no coupling between rows.

#include "hypml/parameters.hpp"
#include "hypml/random.hpp"
#include "hypml/types.hpp"

#include <memory>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace hypml::encoder {

/// Elementwise nonlinearity between MLP layers. GeluTanh is the tanh
/// approximation 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))).
enum class Activation { GeluTanh, None };

std::string_view to_string(Activation a) noexcept;
Activation parse_activation(std::string_view name);

struct MlpSpec {
  Index input_dim = 0;
  std::vector<Index> hidden{64, 64};
  Index output_dim = 64;
  Activation activation = Activation::GeluTanh;
};

struct VitSpec {
  Index image_size = 16;
  Index patch_size = 4;
  Index channels = 1;
  Index width = 32;
  Index depth = 2;
  Index heads = 2;
  Index mlp_width = 64;
  bool freeze_patch_projection = true;

  Index input_dim() const { return channels * image_size * image_size; }
  Index num_patches() const { return (image_size / patch_size) * (image_size / patch_size); }
};

using EncoderSpec = std::variant<MlpSpec, VitSpec>;

Index input_dim(const EncoderSpec& spec);
Index output_dim(const EncoderSpec& spec);
void validate(const EncoderSpec& spec);

/// Opaque per-forward activations kept for the backward pass.
struct Cache {
  virtual ~Cache() = default;
};

class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual std::unique_ptr<Encoder> clone() const = 0;
  virtual EncoderSpec spec() const = 0;

  Index input_dim() const { return encoder::input_dim(spec()); }
  Index output_dim() const { return encoder::output_dim(spec()); }

  /// Inference pass: rows of inputs -> rows of features.
  Matrix forward(const Matrix& inputs) const;
  /// Training pass; fills cache for backward().
  virtual Matrix forward(const Matrix& inputs, std::unique_ptr<Cache>& cache) const = 0;
  /// Accumulates parameter gradients into grads (aligned with params()) and
  /// returns the gradient w.r.t. the inputs. Frozen parameters receive zero.
  virtual Matrix backward(const Cache& cache, const Matrix& upstream, std::span<Matrix> grads) const = 0;

  ParameterSet& params() noexcept { return params_; }
  const ParameterSet& params() const noexcept { return params_; }

 protected:
  ParameterSet params_;
};

class MlpEncoder final : public Encoder {
 public:
  MlpEncoder(MlpSpec spec, Rng& rng);

  std::unique_ptr<Encoder> clone() const override { return std::make_unique<MlpEncoder>(*this); }
  EncoderSpec spec() const override { return spec_; }

  using Encoder::forward;
  Matrix forward(const Matrix& inputs, std::unique_ptr<Cache>& cache) const override;
  Matrix backward(const Cache& cache, const Matrix& upstream, std::span<Matrix> grads) const override;

  std::size_t layer_count() const noexcept { return spec_.hidden.size() + 1; }
  Matrix& weight(std::size_t layer) { return params_[2 * layer].value; }
  Matrix& bias(std::size_t layer) { return params_[2 * layer + 1].value; }

 private:
  MlpSpec spec_;
};

class MicroVit final : public Encoder {
 public:
  MicroVit(VitSpec spec, Rng& rng);

  std::unique_ptr<Encoder> clone() const override { return std::make_unique<MicroVit>(*this); }
  EncoderSpec spec() const override { return spec_; }

  using Encoder::forward;
  Matrix forward(const Matrix& inputs, std::unique_ptr<Cache>& cache) const override;
  Matrix backward(const Cache& cache, const Matrix& upstream, std::span<Matrix> grads) const override;

  /// Flattened patches (num_patches x channels*patch*patch), row-major over the patch grid.
  Matrix patchify(const Eigen::Ref<const Vector>& image) const;

  /// Parameter index lookup by name; throws if absent.
  std::size_t index_of(std::string_view name) const;

 private:
  struct BlockIndex {
    std::size_t ln1_gain, ln1_bias, wq, bq, wk, bk, wv, bv, wo, bo;
    std::size_t ln2_gain, ln2_bias, w1, b1, w2, b2;
  };

  VitSpec spec_;
  std::size_t patch_weight_ = 0, patch_bias_ = 0, class_token_ = 0, position_ = 0;
  std::size_t final_gain_ = 0, final_bias_ = 0;
  std::vector<BlockIndex> blocks_;
};

std::unique_ptr<Encoder> make_encoder(const EncoderSpec& spec, Rng& rng);

/// Linear projection head y = x W + b with W of shape in_dim x out_dim.
/// Initialized with zero bias and a (semi-)orthogonal W.
class ProjectionHead {
 public:
  ProjectionHead(Index in_dim, Index out_dim, Rng& rng);

  Index in_dim() const noexcept { return params_[0].value.rows(); }
  Index out_dim() const noexcept { return params_[0].value.cols(); }

  Matrix forward(const Matrix& inputs) const;
  Matrix backward(const Matrix& inputs, const Matrix& upstream, std::span<Matrix> grads) const;

  Matrix& weight() { return params_[0].value; }
  const Matrix& weight() const { return params_[0].value; }
  Matrix& bias() { return params_[1].value; }
  const Matrix& bias() const { return params_[1].value; }

  ParameterSet& params() noexcept { return params_; }
  const ParameterSet& params() const noexcept { return params_; }

 private:
  ParameterSet params_;
};

/// Semi-orthogonal rows x cols matrix from the QR factorization of a Gaussian draw.
Matrix semi_orthogonal(Index rows, Index cols, Rng& rng);

}  // namespace hypml::encoder
