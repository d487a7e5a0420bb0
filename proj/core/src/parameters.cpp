#include "hypml/parameters.hpp"

namespace hypml {

std::size_t ParameterSet::add(std::string name, Matrix value, bool decay, bool trainable) {
  params_.push_back(Parameter{std::move(name), std::move(value), decay, trainable});
  return params_.size() - 1;
}

Gradients ParameterSet::zero_gradients() const {
  Gradients grads;
  grads.reserve(params_.size());
  for (const auto& p : params_) grads.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
  return grads;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t total = 0;
  for (const auto& p : params_) total += static_cast<std::size_t>(p.value.size());
  return total;
}

}  // namespace hypml
