#pragma once

#include "cpmix/mlp.hpp"

namespace cpmix {

enum class OptimizerKind { sgd_momentum, adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::sgd_momentum;
  double learning_rate = 0.1;
  double momentum = 0.9;  // sgd_momentum only
  double beta1 = 0.9;     // adam
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;  // L2 term added to the gradients
};

// Per-parameter accumulator buffers plus the update rule. Buffers mirror the
// model's parameter shapes exactly.
class OptimizerState {
 public:
  OptimizerState(OptimizerConfig config, const MlpClassifier& model);

  void step(MlpClassifier& model, const Gradients& grads);

  void set_learning_rate(double lr) { config_.learning_rate = lr; }
  const OptimizerConfig& config() const { return config_; }

 private:
  OptimizerConfig config_;
  long long step_count_ = 0;
  Gradients slot1_;  // momentum velocity / adam first moment
  Gradients slot2_;  // adam second moment
};

}  // namespace cpmix
