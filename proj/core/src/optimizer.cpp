#include "hypml/error.hpp"
#include "hypml/training.hpp"

#include <cmath>

namespace hypml::training {

OptimizerState OptimizerState::for_parameters(std::span<const Parameter* const> params, AdamWConfig hp) {
  OptimizerState state;
  state.hp = hp;
  for (const Parameter* p : params) {
    state.first_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    state.second_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
  return state;
}

void optimizer_step(std::span<Parameter* const> params, const Gradients& grads, OptimizerState& state) {
  require(params.size() == grads.size() && params.size() == state.first_moment.size(), ErrorKind::Config,
          "optimizer: parameter, gradient and moment counts differ");
  const AdamWConfig& hp = state.hp;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(hp.beta1, t);
  const double correction2 = 1.0 - std::pow(hp.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    if (!p.trainable) continue;
    Matrix& m = state.first_moment[i];
    Matrix& v = state.second_moment[i];
    const Matrix& g = grads[i];
    if (p.decay && hp.weight_decay != 0.0) p.value *= 1.0 - hp.lr * hp.weight_decay;
    m = hp.beta1 * m + (1.0 - hp.beta1) * g;
    v = hp.beta2 * v + (1.0 - hp.beta2) * g.cwiseProduct(g);
    const double step_size = hp.lr / correction1;
    const double sqrt_correction2 = std::sqrt(correction2);
    p.value.array() -= step_size * m.array() / (v.array().sqrt() / sqrt_correction2 + hp.eps);
  }
}

double global_norm(const Gradients& grads) {
  double total = 0.0;
  for (const auto& g : grads) total += g.squaredNorm();
  return std::sqrt(total);
}

double clip_grad_norm(Gradients& grads, double max_norm) {
  require(max_norm > 0.0, ErrorKind::Config, "gradient clip norm must be positive");
  const double norm = global_norm(grads);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& g : grads) g *= scale;
  }
  return norm;
}

}  // namespace hypml::training
