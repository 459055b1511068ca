#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cpmix/labels.hpp"
#include "cpmix/losses.hpp"
#include "cpmix/matrix.hpp"
#include "cpmix/rng.hpp"

namespace cpmix {

// Fully connected classifier: rectified hidden layers, identity output.
// Gradients are hand-derived in backward() and finite-difference-checked in
// the test suite; there is no autodiff machinery behind this.
struct MlpClassifier {
  std::vector<std::size_t> layer_dims;      // input, hidden..., output
  std::vector<Matrix> weights;              // [l]: dims[l+1] x dims[l]
  std::vector<std::vector<double>> biases;  // [l]: dims[l+1]

  // Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  static MlpClassifier init(std::vector<std::size_t> dims, Rng& rng);

  std::size_t num_layers() const { return weights.size(); }
  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t output_dim() const { return layer_dims.back(); }
  std::size_t num_params() const;

  std::vector<double> forward(std::span<const double> x) const;
  int predict(std::span<const double> x) const;

  // Flat little-endian float64 blob preceded by a one-line JSON header of
  // layer_dims.
  void save(const std::string& path) const;
  static MlpClassifier load(const std::string& path);
};

// Smallest index attaining the maximum.
int argmax_lowest(std::span<const double> values);

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;

  static Gradients zeros_like(const MlpClassifier& model);
  void add_scaled(const Gradients& other, double scale);
  void scale(double s);
};

struct BackwardResult {
  Gradients grads;
  double mean_loss = 0.0;
  std::vector<int> predictions;  // argmax of raw logits per row
};

// Gradients of the batch-mean loss w.r.t. every parameter. class_counts must
// be supplied iff loss is balanced_softmax. The model is not mutated.
BackwardResult backward(const MlpClassifier& model, const Matrix& inputs,
                        const std::vector<SoftLabel>& targets, LossKind loss,
                        std::span<const int> class_counts = {});

}  // namespace cpmix
