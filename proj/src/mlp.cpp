#include "cpmix/mlp.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "cpmix/errors.hpp"

namespace cpmix {

MlpClassifier MlpClassifier::init(std::vector<std::size_t> dims, Rng& rng) {
  if (dims.size() < 2)
    throw std::invalid_argument("MlpClassifier::init: need at least input and output dims");
  for (std::size_t d : dims)
    if (d == 0) throw std::invalid_argument("MlpClassifier::init: zero layer dim");

  MlpClassifier model;
  model.layer_dims = std::move(dims);
  for (std::size_t l = 0; l + 1 < model.layer_dims.size(); ++l) {
    const std::size_t fan_in = model.layer_dims[l];
    const std::size_t fan_out = model.layer_dims[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix w(fan_out, fan_in);
    for (double& v : w.data) v = (2.0 * rng.uniform() - 1.0) * limit;
    model.weights.push_back(std::move(w));
    model.biases.emplace_back(fan_out, 0.0);
  }
  return model;
}

std::size_t MlpClassifier::num_params() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l)
    n += weights[l].rows * weights[l].cols + biases[l].size();
  return n;
}

std::vector<double> MlpClassifier::forward(std::span<const double> x) const {
  if (x.size() != input_dim())
    throw std::invalid_argument("MlpClassifier::forward: input dimension mismatch");
  std::vector<double> act(x.begin(), x.end());
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const Matrix& w = weights[l];
    std::vector<double> next(w.rows);
    for (std::size_t j = 0; j < w.rows; ++j) {
      double z = biases[l][j];
      const double* wrow = w.data.data() + j * w.cols;
      for (std::size_t i = 0; i < w.cols; ++i) z += wrow[i] * act[i];
      next[j] = z;
    }
    const bool hidden = l + 1 < weights.size();
    if (hidden)
      for (double& v : next) v = v > 0.0 ? v : 0.0;
    act = std::move(next);
  }
  return act;
}

int MlpClassifier::predict(std::span<const double> x) const {
  const std::vector<double> logits = forward(x);
  return argmax_lowest(logits);
}

int argmax_lowest(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("argmax_lowest: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return static_cast<int>(best);
}

namespace {

void write_le_double(std::ostream& os, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  os.write(bytes, 8);
}

double read_le_double(std::istream& is) {
  char bytes[8];
  is.read(bytes, 8);
  if (!is) throw std::runtime_error("model file truncated");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i)
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i])) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void MlpClassifier::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open model file for writing: " + path);
  nlohmann::json header;
  header["layer_dims"] = layer_dims;
  os << header.dump() << '\n';
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (double v : weights[l].data) write_le_double(os, v);
    for (double v : biases[l]) write_le_double(os, v);
  }
  if (!os) throw std::runtime_error("failed writing model file: " + path);
}

MlpClassifier MlpClassifier::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open model file: " + path);
  std::string header_line;
  if (!std::getline(is, header_line))
    throw std::runtime_error("model file missing header: " + path);
  const nlohmann::json header = nlohmann::json::parse(header_line);
  MlpClassifier model;
  model.layer_dims = header.at("layer_dims").get<std::vector<std::size_t>>();
  if (model.layer_dims.size() < 2)
    throw std::runtime_error("model header has fewer than two layer dims");
  for (std::size_t l = 0; l + 1 < model.layer_dims.size(); ++l) {
    Matrix w(model.layer_dims[l + 1], model.layer_dims[l]);
    for (double& v : w.data) v = read_le_double(is);
    std::vector<double> b(model.layer_dims[l + 1]);
    for (double& v : b) v = read_le_double(is);
    model.weights.push_back(std::move(w));
    model.biases.push_back(std::move(b));
  }
  return model;
}

Gradients Gradients::zeros_like(const MlpClassifier& model) {
  Gradients g;
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    g.weights.emplace_back(model.weights[l].rows, model.weights[l].cols);
    g.biases.emplace_back(model.biases[l].size(), 0.0);
  }
  return g;
}

void Gradients::add_scaled(const Gradients& other, double s) {
  if (other.weights.size() != weights.size())
    throw std::invalid_argument("Gradients::add_scaled: layer count mismatch");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (!weights[l].same_shape(other.weights[l]) ||
        biases[l].size() != other.biases[l].size())
      throw std::invalid_argument("Gradients::add_scaled: shape mismatch");
    for (std::size_t i = 0; i < weights[l].data.size(); ++i)
      weights[l].data[i] += s * other.weights[l].data[i];
    for (std::size_t i = 0; i < biases[l].size(); ++i)
      biases[l][i] += s * other.biases[l][i];
  }
}

void Gradients::scale(double s) {
  for (auto& w : weights)
    for (double& v : w.data) v *= s;
  for (auto& b : biases)
    for (double& v : b) v *= s;
}

BackwardResult backward(const MlpClassifier& model, const Matrix& inputs,
                        const std::vector<SoftLabel>& targets, LossKind loss,
                        std::span<const int> class_counts) {
  if (inputs.rows == 0) throw std::invalid_argument("backward: empty batch");
  if (inputs.rows != targets.size())
    throw std::invalid_argument("backward: inputs/targets row mismatch");
  if (inputs.cols != model.input_dim())
    throw std::invalid_argument("backward: input dimension mismatch");
  const std::size_t c = model.output_dim();
  if (loss == LossKind::balanced_softmax) {
    if (class_counts.size() != c)
      throw std::invalid_argument("backward: balanced_softmax requires class counts");
  } else if (!class_counts.empty()) {
    throw std::invalid_argument("backward: class counts only valid for balanced_softmax");
  }

  BackwardResult result;
  result.grads = Gradients::zeros_like(model);
  result.predictions.resize(inputs.rows);
  const std::size_t num_layers = model.num_layers();
  double loss_sum = 0.0;

  // acts[0] is the input, acts[l] the post-activation of layer l-1.
  std::vector<std::vector<double>> acts(num_layers + 1);
  for (std::size_t r = 0; r < inputs.rows; ++r) {
    const auto x = inputs.row(r);
    acts[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < num_layers; ++l) {
      const Matrix& w = model.weights[l];
      acts[l + 1].assign(w.rows, 0.0);
      for (std::size_t j = 0; j < w.rows; ++j) {
        double z = model.biases[l][j];
        const double* wrow = w.data.data() + j * w.cols;
        for (std::size_t i = 0; i < w.cols; ++i) z += wrow[i] * acts[l][i];
        acts[l + 1][j] = (l + 1 < num_layers && z < 0.0) ? 0.0 : z;
      }
    }
    const std::vector<double>& logits = acts[num_layers];
    result.predictions[r] = argmax_lowest(logits);

    LossGrad lg = loss == LossKind::balanced_softmax
                      ? balanced_softmax_loss(logits, targets[r], class_counts)
                      : cross_entropy_loss(logits, targets[r]);
    loss_sum += lg.loss;

    // Backpropagate delta = dL/dz layer by layer.
    std::vector<double> delta = std::move(lg.grad);
    for (std::size_t l = num_layers; l-- > 0;) {
      Matrix& gw = result.grads.weights[l];
      std::vector<double>& gb = result.grads.biases[l];
      const std::vector<double>& in = acts[l];
      for (std::size_t j = 0; j < gw.rows; ++j) {
        const double d = delta[j];
        gb[j] += d;
        double* grow = gw.data.data() + j * gw.cols;
        for (std::size_t i = 0; i < gw.cols; ++i) grow[i] += d * in[i];
      }
      if (l > 0) {
        const Matrix& w = model.weights[l];
        std::vector<double> prev(w.cols, 0.0);
        for (std::size_t j = 0; j < w.rows; ++j) {
          const double d = delta[j];
          const double* wrow = w.data.data() + j * w.cols;
          for (std::size_t i = 0; i < w.cols; ++i) prev[i] += wrow[i] * d;
        }
        // ReLU mask: post-activation is positive exactly where z was.
        for (std::size_t i = 0; i < prev.size(); ++i)
          if (acts[l][i] <= 0.0) prev[i] = 0.0;
        delta = std::move(prev);
      }
    }
  }

  const double inv_b = 1.0 / static_cast<double>(inputs.rows);
  result.grads.scale(inv_b);
  result.mean_loss = loss_sum * inv_b;
  if (!std::isfinite(result.mean_loss))
    throw NumericError("backward: non-finite mean loss");
  return result;
}

}  // namespace cpmix
