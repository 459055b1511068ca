#pragma once

// Test-only oracles, kept independent of the library's gradient and forward
// paths: central finite differences over model parameters, a straight-line
// re-implementation of the forward map, and small statistics helpers.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "cpmix/mlp.hpp"
#include "cpmix/rng.hpp"

namespace oracles {

// Flat view over all parameters in the same order backward() emits them.
inline std::vector<double*> param_pointers(cpmix::MlpClassifier& model) {
  std::vector<double*> ptrs;
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    for (double& v : model.weights[l].data) ptrs.push_back(&v);
    for (double& v : model.biases[l]) ptrs.push_back(&v);
  }
  return ptrs;
}

inline std::vector<double> flatten(const cpmix::Gradients& grads) {
  std::vector<double> flat;
  for (std::size_t l = 0; l < grads.weights.size(); ++l) {
    flat.insert(flat.end(), grads.weights[l].data.begin(), grads.weights[l].data.end());
    flat.insert(flat.end(), grads.biases[l].begin(), grads.biases[l].end());
  }
  return flat;
}

// Central finite difference of `loss_of_model` along parameter k.
inline double central_diff(cpmix::MlpClassifier& model, std::size_t k,
                           const std::function<double(const cpmix::MlpClassifier&)>& loss_of_model,
                           double h = 1e-5) {
  std::vector<double*> ptrs = param_pointers(model);
  const double saved = *ptrs[k];
  *ptrs[k] = saved + h;
  const double up = loss_of_model(model);
  *ptrs[k] = saved - h;
  const double down = loss_of_model(model);
  *ptrs[k] = saved;
  return (up - down) / (2.0 * h);
}

// Max relative error of the analytic gradient against central differences on
// a random sample of coordinates.
inline double max_grad_rel_error(cpmix::MlpClassifier& model,
                                 const std::vector<double>& analytic,
                                 const std::function<double(const cpmix::MlpClassifier&)>& loss_of_model,
                                 std::size_t coords, cpmix::Rng& rng) {
  const std::size_t n = analytic.size();
  double worst = 0.0;
  for (std::size_t s = 0; s < coords; ++s) {
    const std::size_t k = rng.bounded(n);
    const double fd = central_diff(model, k, loss_of_model);
    const double denom = std::max({std::abs(fd), std::abs(analytic[k]), 1e-8});
    worst = std::max(worst, std::abs(fd - analytic[k]) / denom);
  }
  return worst;
}

// Forward pass re-written from scratch: explicit loops over per-layer matrix
// products, no shared code with MlpClassifier::forward.
inline std::vector<double> naive_forward(const cpmix::MlpClassifier& model,
                                         std::vector<double> x) {
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    const auto& w = model.weights[l];
    std::vector<double> z(w.rows, 0.0);
    for (std::size_t j = 0; j < w.rows; ++j) {
      for (std::size_t i = 0; i < w.cols; ++i) z[j] += w(j, i) * x[i];
      z[j] += model.biases[l][j];
    }
    if (l + 1 < model.weights.size())
      for (double& v : z)
        if (v < 0.0) v = 0.0;
    x = std::move(z);
  }
  return x;
}

// Kolmogorov-Smirnov distance of samples against the U[0,1] CDF.
inline double ks_vs_uniform(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    d = std::max({d, std::abs(samples[i] - lo), std::abs(samples[i] - hi)});
  }
  return d;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

// Chi-squared statistic for observed counts against uniform expectation.
inline double chi2_uniform(const std::vector<long long>& observed, double total) {
  const double expect = total / static_cast<double>(observed.size());
  double stat = 0.0;
  for (long long o : observed) {
    const double d = static_cast<double>(o) - expect;
    stat += d * d / expect;
  }
  return stat;
}

}  // namespace oracles
