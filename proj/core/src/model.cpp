#include "hypml/model.hpp"

#include <span>

namespace hypml {

Model::Model(ModelSpec spec, Rng& rng)
    : spec_(std::move(spec)),
      encoder_(encoder::make_encoder(spec_.encoder, rng)),
      head_(encoder::output_dim(spec_.encoder), spec_.head_dim, rng) {}

Model::Model(const Model& other)
    : spec_(other.spec_), encoder_(other.encoder_->clone()), head_(other.head_) {}

Model& Model::operator=(const Model& other) {
  if (this != &other) {
    spec_ = other.spec_;
    encoder_ = other.encoder_->clone();
    head_ = other.head_;
  }
  return *this;
}

Matrix Model::encode(const Matrix& inputs) const { return encoder_->forward(inputs); }

Matrix Model::project(const Matrix& inputs) const { return head_.forward(encode(inputs)); }

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out;
  for (auto& p : encoder_->params()) out.push_back(&p);
  for (auto& p : head_.params()) out.push_back(&p);
  return out;
}

std::vector<const Parameter*> Model::parameters() const {
  std::vector<const Parameter*> out;
  for (const auto& p : encoder_->params()) out.push_back(&p);
  for (const auto& p : head_.params()) out.push_back(&p);
  return out;
}

Gradients Model::zero_gradients() const {
  Gradients grads = encoder_->params().zero_gradients();
  for (auto& g : head_.params().zero_gradients()) grads.push_back(std::move(g));
  return grads;
}

Model::Pass Model::forward(const Matrix& inputs) const {
  Pass pass;
  pass.features = encoder_->forward(inputs, pass.cache);
  pass.head_out = head_.forward(pass.features);
  return pass;
}

Gradients Model::backward(const Pass& pass, const Matrix& d_head_out) const {
  Gradients grads = zero_gradients();
  const std::size_t encoder_count = encoder_->params().size();
  std::span<Matrix> all(grads);
  const Matrix d_features = head_.backward(pass.features, d_head_out, all.subspan(encoder_count));
  encoder_->backward(*pass.cache, d_features, all.first(encoder_count));
  return grads;
}

}  // namespace hypml
