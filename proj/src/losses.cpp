#include "cpmix/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cpmix/errors.hpp"

namespace cpmix {

std::vector<double> log_softmax(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("log_softmax: empty logits");
  double max_logit = logits[0];
  for (double z : logits) {
    if (!std::isfinite(z)) throw NumericError("log_softmax: non-finite logit");
    max_logit = std::max(max_logit, z);
  }
  double sum_exp = 0.0;
  for (double z : logits) sum_exp += std::exp(z - max_logit);
  const double lse = max_logit + std::log(sum_exp);
  std::vector<double> out(logits.size());
  for (std::size_t c = 0; c < logits.size(); ++c) out[c] = logits[c] - lse;
  return out;
}

namespace {

LossGrad soft_ce_on(std::span<const double> logits, const SoftLabel& target) {
  if (logits.size() != target.size())
    throw std::invalid_argument("cross_entropy_loss: logits/target length mismatch");
  const std::vector<double> lsm = log_softmax(logits);
  LossGrad out;
  out.grad.resize(logits.size());
  double loss = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    loss -= target.probs[c] * lsm[c];
    out.grad[c] = std::exp(lsm[c]) - target.probs[c];
  }
  out.loss = std::max(0.0, loss);
  return out;
}

std::vector<double> count_shifts(std::span<const int> class_counts) {
  if (class_counts.empty())
    throw std::invalid_argument("balanced_softmax_loss: empty class counts");
  int max_count = 0;
  for (int n : class_counts) {
    if (n < 1)
      throw std::invalid_argument("balanced_softmax_loss: class counts must be >= 1");
    max_count = std::max(max_count, n);
  }
  std::vector<double> shifts(class_counts.size());
  for (std::size_t c = 0; c < class_counts.size(); ++c)
    shifts[c] = std::log(static_cast<double>(class_counts[c]) /
                         static_cast<double>(max_count));
  return shifts;
}

}  // namespace

LossGrad cross_entropy_loss(std::span<const double> logits, const SoftLabel& target) {
  return soft_ce_on(logits, target);
}

LossGrad balanced_softmax_loss(std::span<const double> logits, int target_class,
                               std::span<const int> class_counts) {
  const int c = static_cast<int>(logits.size());
  if (target_class < 0 || target_class >= c)
    throw std::out_of_range("balanced_softmax_loss: target class out of range");
  return balanced_softmax_loss(logits, SoftLabel::one_hot(target_class, c),
                               class_counts);
}

LossGrad balanced_softmax_loss(std::span<const double> logits, const SoftLabel& target,
                               std::span<const int> class_counts) {
  if (class_counts.size() != logits.size())
    throw std::invalid_argument("balanced_softmax_loss: counts/logits length mismatch");
  const std::vector<double> shifts = count_shifts(class_counts);
  std::vector<double> shifted(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) shifted[i] = logits[i] + shifts[i];
  // The shift is constant in the logits, so the gradient through the shifted
  // softmax is the gradient w.r.t. the raw logits.
  return soft_ce_on(shifted, target);
}

}  // namespace cpmix
