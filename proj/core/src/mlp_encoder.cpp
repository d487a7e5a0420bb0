#include "activation.hpp"
#include "hypml/encoder.hpp"
#include "hypml/error.hpp"

namespace hypml::encoder {
namespace {

struct MlpCache final : Cache {
  std::vector<Matrix> inputs;       // input of each layer
  std::vector<Matrix> pre_activations;
};

}  // namespace

MlpEncoder::MlpEncoder(MlpSpec spec, Rng& rng) : spec_(std::move(spec)) {
  validate(spec_);
  std::vector<Index> dims{spec_.input_dim};
  dims.insert(dims.end(), spec_.hidden.begin(), spec_.hidden.end());
  dims.push_back(spec_.output_dim);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const std::string prefix = "mlp." + std::to_string(l);
    params_.add(prefix + ".weight", detail::fan_in_uniform(dims[l], dims[l + 1], dims[l], rng), true);
    params_.add(prefix + ".bias", detail::fan_in_uniform(1, dims[l + 1], dims[l], rng), false);
  }
}

Matrix MlpEncoder::forward(const Matrix& inputs, std::unique_ptr<Cache>& cache) const {
  require(inputs.cols() == spec_.input_dim, ErrorKind::Data, "mlp encoder: input width mismatch");
  auto store = std::make_unique<MlpCache>();
  Matrix activation = inputs;
  const std::size_t layers = layer_count();
  for (std::size_t l = 0; l < layers; ++l) {
    const Matrix& w = params_[2 * l].value;
    const Matrix& b = params_[2 * l + 1].value;
    Matrix pre = activation * w;
    pre.rowwise() += b.row(0);
    store->inputs.push_back(std::move(activation));
    const bool last = l + 1 == layers;
    if (!last && spec_.activation == Activation::GeluTanh) {
      activation = detail::gelu(pre);
    } else {
      activation = pre;
    }
    store->pre_activations.push_back(std::move(pre));
  }
  cache = std::move(store);
  return activation;
}

Matrix MlpEncoder::backward(const Cache& cache, const Matrix& upstream, std::span<Matrix> grads) const {
  const auto& store = dynamic_cast<const MlpCache&>(cache);
  Matrix g = upstream;
  for (std::size_t l = layer_count(); l-- > 0;) {
    const bool last = l + 1 == layer_count();
    if (!last && spec_.activation == Activation::GeluTanh) {
      g = detail::gelu_backward(store.pre_activations[l], g);
    }
    grads[2 * l] += store.inputs[l].transpose() * g;
    grads[2 * l + 1] += g.colwise().sum();
    g = g * params_[2 * l].value.transpose();
  }
  return g;
}

}  // namespace hypml::encoder
