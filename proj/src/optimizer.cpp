#include "cpmix/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace cpmix {

OptimizerState::OptimizerState(OptimizerConfig config, const MlpClassifier& model)
    : config_(config),
      slot1_(Gradients::zeros_like(model)),
      slot2_(Gradients::zeros_like(model)) {}

namespace {

void check_shapes(const MlpClassifier& model, const Gradients& grads) {
  if (grads.weights.size() != model.weights.size())
    throw std::invalid_argument("optimizer step: layer count mismatch");
  for (std::size_t l = 0; l < model.weights.size(); ++l)
    if (!model.weights[l].same_shape(grads.weights[l]) ||
        model.biases[l].size() != grads.biases[l].size())
      throw std::invalid_argument("optimizer step: gradient shape mismatch");
}

}  // namespace

void OptimizerState::step(MlpClassifier& model, const Gradients& grads) {
  check_shapes(model, grads);
  ++step_count_;
  const double lr = config_.learning_rate;
  const double wd = config_.weight_decay;

  auto update_span = [&](std::span<double> params, std::span<const double> g,
                         std::span<double> s1, std::span<double> s2) {
    if (config_.kind == OptimizerKind::sgd_momentum) {
      for (std::size_t i = 0; i < params.size(); ++i) {
        const double grad = g[i] + wd * params[i];
        s1[i] = config_.momentum * s1[i] + grad;
        params[i] -= lr * s1[i];
      }
    } else {
      const double corr1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_count_));
      const double corr2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_count_));
      for (std::size_t i = 0; i < params.size(); ++i) {
        const double grad = g[i] + wd * params[i];
        s1[i] = config_.beta1 * s1[i] + (1.0 - config_.beta1) * grad;
        s2[i] = config_.beta2 * s2[i] + (1.0 - config_.beta2) * grad * grad;
        const double m_hat = s1[i] / corr1;
        const double v_hat = s2[i] / corr2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
      }
    }
  };

  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    update_span(model.weights[l].data, grads.weights[l].data, slot1_.weights[l].data,
                slot2_.weights[l].data);
    update_span(model.biases[l], grads.biases[l], slot1_.biases[l], slot2_.biases[l]);
  }
}

}  // namespace cpmix
