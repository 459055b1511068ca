#pragma once

#include <span>
#include <vector>

#include "cpmix/labels.hpp"
#include "cpmix/rng.hpp"

namespace cpmix {

struct MixConfig {
  double alpha = 1.5;      // Beta(alpha, alpha) shape for the mixing draw
  double t = 0.5;          // label-mixing weight between random and count-aware
  double gamma_cp = 2.5;   // weight of the confusion-pair regularizer
  double gamma_mix = 2.5;  // weight of the plain mixup regularizer

  void validate() const;
};

struct MixedExample {
  std::vector<double> x_mix;
  SoftLabel y_mix;
  double lambda_used = 0.0;
  int class_t = 0;
  int class_m = 0;
};

// Draw from Beta(alpha, alpha) via two Gamma(alpha) variates.
double sample_lambda(double alpha, Rng& rng);

// Elementwise convex combination lambda*x1 + (1-lambda)*x2.
std::vector<double> mix_inputs(std::span<const double> x1, std::span<const double> x2,
                               double lambda);

// t*lambda + (1-t) * n_{y2} / (n_{y1} + n_{y2}); the count term skews the
// label weight toward the rarer class.
double label_lambda(double lambda, double t, int n_y1, int n_y2);

// lambda_y * e_{y1} + (1 - lambda_y) * e_{y2}; one-hot when y1 == y2.
SoftLabel mix_labels(int y1, int y2, double lambda_y, int num_classes);

// One Beta draw feeds both the input mix and label_lambda.
MixedExample cp_mix_pair(std::span<const double> x1, int y1,
                         std::span<const double> x2, int y2,
                         std::span<const int> class_counts, const MixConfig& config,
                         Rng& rng);

}  // namespace cpmix
