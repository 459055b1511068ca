#pragma once

#include <span>
#include <vector>

#include "cpmix/labels.hpp"

namespace cpmix {

enum class LossKind { cross_entropy, balanced_softmax };

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d logits
};

// log softmax(z) with log-sum-exp stabilization. Throws NumericError on
// non-finite logits.
std::vector<double> log_softmax(std::span<const double> logits);

// loss = -sum_c target_c * log softmax(z)_c, grad = softmax(z) - target.
LossGrad cross_entropy_loss(std::span<const double> logits, const SoftLabel& target);

// Balanced softmax: cross-entropy on logits shifted by log(n_c / max_c n_c).
// Normalizing by the max count keeps the shift exactly zero for uniform
// counts, so the loss then matches cross_entropy_loss bit for bit.
LossGrad balanced_softmax_loss(std::span<const double> logits, int target_class,
                               std::span<const int> class_counts);

// Soft-target extension: target-weighted sum of shifted log-softmax terms.
// Reduces to the hard version on one-hot targets. The default training paths
// only ever pass hard (one-hot) targets here.
LossGrad balanced_softmax_loss(std::span<const double> logits, const SoftLabel& target,
                               std::span<const int> class_counts);

}  // namespace cpmix
