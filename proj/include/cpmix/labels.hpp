#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace cpmix {

// Probability vector over classes. Hard labels are one-hot instances.
struct SoftLabel {
  std::vector<double> probs;

  SoftLabel() = default;
  explicit SoftLabel(std::vector<double> p) : probs(std::move(p)) {}

  static SoftLabel one_hot(int c, int num_classes) {
    if (c < 0 || c >= num_classes)
      throw std::out_of_range("SoftLabel::one_hot: class out of range");
    SoftLabel y;
    y.probs.assign(static_cast<std::size_t>(num_classes), 0.0);
    y.probs[static_cast<std::size_t>(c)] = 1.0;
    return y;
  }

  std::size_t size() const { return probs.size(); }

  // Entries in [0, 1] and summing to 1 within tol.
  bool valid(double tol = 1e-9) const {
    double sum = 0.0;
    for (double p : probs) {
      if (!(p >= 0.0 && p <= 1.0)) return false;
      sum += p;
    }
    return std::abs(sum - 1.0) <= tol;
  }
};

}  // namespace cpmix
