#include "cpmix/mixing.hpp"

#include <stdexcept>
#include <string>

#include "cpmix/errors.hpp"

namespace cpmix {

void MixConfig::validate() const {
  if (!(alpha > 0.0)) throw ConfigError("mix config: alpha must be > 0");
  if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("mix config: t must be in [0, 1]");
  if (!(gamma_cp >= 0.0)) throw ConfigError("mix config: gamma_cp must be >= 0");
  if (!(gamma_mix >= 0.0)) throw ConfigError("mix config: gamma_mix must be >= 0");
}

double sample_lambda(double alpha, Rng& rng) {
  if (!(alpha > 0.0))
    throw std::invalid_argument("sample_lambda: alpha must be positive");
  return rng.beta(alpha, alpha);
}

std::vector<double> mix_inputs(std::span<const double> x1, std::span<const double> x2,
                               double lambda) {
  if (x1.size() != x2.size())
    throw std::invalid_argument("mix_inputs: dimension mismatch");
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("mix_inputs: lambda must be in [0, 1]");
  std::vector<double> out(x1.size());
  const double complement = 1.0 - lambda;
  for (std::size_t i = 0; i < x1.size(); ++i)
    out[i] = lambda * x1[i] + complement * x2[i];
  return out;
}

double label_lambda(double lambda, double t, int n_y1, int n_y2) {
  if (n_y1 < 1 || n_y2 < 1)
    throw std::invalid_argument("label_lambda: class counts must be >= 1");
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("label_lambda: lambda must be in [0, 1]");
  if (!(t >= 0.0 && t <= 1.0))
    throw std::invalid_argument("label_lambda: t must be in [0, 1]");
  const double count_term =
      static_cast<double>(n_y2) / (static_cast<double>(n_y1) + n_y2);
  return t * lambda + (1.0 - t) * count_term;
}

SoftLabel mix_labels(int y1, int y2, double lambda_y, int num_classes) {
  if (y1 < 0 || y1 >= num_classes || y2 < 0 || y2 >= num_classes)
    throw std::out_of_range("mix_labels: class out of range");
  if (!(lambda_y >= 0.0 && lambda_y <= 1.0))
    throw std::invalid_argument("mix_labels: lambda_y must be in [0, 1]");
  SoftLabel y;
  y.probs.assign(static_cast<std::size_t>(num_classes), 0.0);
  if (y1 == y2) {
    y.probs[static_cast<std::size_t>(y1)] = 1.0;
  } else {
    y.probs[static_cast<std::size_t>(y1)] = lambda_y;
    y.probs[static_cast<std::size_t>(y2)] = 1.0 - lambda_y;
  }
  return y;
}

MixedExample cp_mix_pair(std::span<const double> x1, int y1,
                         std::span<const double> x2, int y2,
                         std::span<const int> class_counts, const MixConfig& config,
                         Rng& rng) {
  const int num_classes = static_cast<int>(class_counts.size());
  if (y1 < 0 || y1 >= num_classes || y2 < 0 || y2 >= num_classes)
    throw std::out_of_range("cp_mix_pair: class out of range");
  const double lambda = sample_lambda(config.alpha, rng);
  MixedExample out;
  out.x_mix = mix_inputs(x1, x2, lambda);
  const double ly =
      label_lambda(lambda, config.t, class_counts[static_cast<std::size_t>(y1)],
                   class_counts[static_cast<std::size_t>(y2)]);
  out.y_mix = mix_labels(y1, y2, ly, num_classes);
  out.lambda_used = lambda;
  out.class_t = y1;
  out.class_m = y2;
  return out;
}

}  // namespace cpmix
