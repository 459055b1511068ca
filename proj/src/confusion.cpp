#include "cpmix/confusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace cpmix {

long long ConfusionMatrix::row_sum(int t) const {
  long long s = 0;
  for (int p = 0; p < num_classes; ++p) s += at(t, p);
  return s;
}

long long ConfusionMatrix::trace() const {
  long long s = 0;
  for (int c = 0; c < num_classes; ++c) s += at(c, c);
  return s;
}

long long ConfusionMatrix::total() const {
  long long s = 0;
  for (long long v : counts) s += v;
  return s;
}

long long ConfusionMatrix::off_diagonal_total() const { return total() - trace(); }

void ConfusionMatrix::save_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open confusion csv for writing: " + path);
  for (int t = 0; t < num_classes; ++t) {
    for (int p = 0; p < num_classes; ++p) {
      if (p) os << ',';
      os << at(t, p);
    }
    os << '\n';
  }
}

ConfusionMatrix ConfusionMatrix::load_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open confusion csv: " + path);
  std::vector<std::vector<long long>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<long long> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) row.push_back(std::stoll(field));
    rows.push_back(std::move(row));
  }
  const int c = static_cast<int>(rows.size());
  ConfusionMatrix m(c);
  for (int t = 0; t < c; ++t) {
    if (static_cast<int>(rows[static_cast<std::size_t>(t)].size()) != c)
      throw std::runtime_error("confusion csv is not square: " + path);
    for (int p = 0; p < c; ++p) m.at(t, p) = rows[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  }
  return m;
}

ConfusionMatrix confusion_matrix(const MlpClassifier& model, const LabeledDataset& data) {
  const int c = data.num_classes();
  if (static_cast<int>(model.output_dim()) != c)
    throw std::invalid_argument("confusion_matrix: model output dim != class count");
  ConfusionMatrix m(c);
  for (std::size_t r = 0; r < data.size(); ++r)
    ++m.at(data.labels[r], model.predict(data.features.row(r)));
  return m;
}

std::vector<long long> confusion_histogram(const ConfusionMatrix& matrix) {
  std::vector<long long> values;
  values.reserve(static_cast<std::size_t>(matrix.num_classes) *
                 (matrix.num_classes - 1));
  for (int t = 0; t < matrix.num_classes; ++t)
    for (int p = 0; p < matrix.num_classes; ++p)
      if (t != p) values.push_back(matrix.at(t, p));
  std::sort(values.begin(), values.end(), std::greater<>());
  return values;
}

ConfusionPairBag::ConfusionPairBag(int num_classes) {
  if (num_classes < 2)
    throw std::invalid_argument("ConfusionPairBag: need >= 2 classes");
  by_true_.resize(static_cast<std::size_t>(num_classes));
  per_true_total_.assign(static_cast<std::size_t>(num_classes), 0);
}

void ConfusionPairBag::record(int true_class, int pred_class) {
  const int c = num_classes();
  if (true_class < 0 || true_class >= c || pred_class < 0 || pred_class >= c)
    throw std::out_of_range("ConfusionPairBag::record: class out of range");
  if (true_class == pred_class)
    throw std::invalid_argument("ConfusionPairBag::record: diagonal pair");
  ++by_true_[static_cast<std::size_t>(true_class)][pred_class];
  ++per_true_total_[static_cast<std::size_t>(true_class)];
  ++total_;
}

void ConfusionPairBag::record_batch(std::span<const int> truths,
                                    std::span<const int> preds) {
  if (truths.size() != preds.size())
    throw std::invalid_argument("ConfusionPairBag::record_batch: length mismatch");
  for (std::size_t i = 0; i < truths.size(); ++i)
    if (truths[i] != preds[i]) record(truths[i], preds[i]);
}

long long ConfusionPairBag::multiplicity(int true_class, int pred_class) const {
  const auto& row = by_true_[static_cast<std::size_t>(true_class)];
  const auto it = row.find(pred_class);
  return it == row.end() ? 0 : it->second;
}

int ConfusionPairBag::sample_confused_class(int true_class, Rng& rng,
                                            bool frequency_weighted) const {
  const int c = num_classes();
  if (true_class < 0 || true_class >= c)
    throw std::out_of_range("sample_confused_class: class out of range");
  ++sample_queries;

  const auto& row = by_true_[static_cast<std::size_t>(true_class)];
  if (row.empty()) {
    // Nothing recorded for this class yet: uniform over the other classes.
    const auto other = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(c - 1)));
    return other >= true_class ? other + 1 : other;
  }
  if (frequency_weighted) {
    auto r = static_cast<long long>(
        rng.bounded(static_cast<std::uint64_t>(per_true_total_[static_cast<std::size_t>(true_class)])));
    for (const auto& [pred, count] : row) {
      if (r < count) return pred;
      r -= count;
    }
  } else {
    auto k = rng.bounded(row.size());
    for (const auto& [pred, count] : row)
      if (k-- == 0) return pred;
  }
  throw std::logic_error("sample_confused_class: inconsistent totals");
}

void ConfusionPairBag::apply_decay(double factor) {
  if (!(factor >= 0.0 && factor <= 1.0))
    throw std::invalid_argument("ConfusionPairBag::apply_decay: factor in [0, 1]");
  total_ = 0;
  for (std::size_t t = 0; t < by_true_.size(); ++t) {
    long long row_total = 0;
    for (auto it = by_true_[t].begin(); it != by_true_[t].end();) {
      it->second = static_cast<long long>(
          std::floor(static_cast<double>(it->second) * factor));
      if (it->second <= 0) {
        it = by_true_[t].erase(it);
      } else {
        row_total += it->second;
        ++it;
      }
    }
    per_true_total_[t] = row_total;
    total_ += row_total;
  }
}

nlohmann::json ConfusionPairBag::to_json() const {
  nlohmann::json pairs = nlohmann::json::object();
  for (std::size_t t = 0; t < by_true_.size(); ++t)
    for (const auto& [pred, count] : by_true_[t])
      pairs[std::to_string(t) + "," + std::to_string(pred)] = count;
  return nlohmann::json{{"num_classes", num_classes()}, {"pairs", pairs}};
}

ConfusionPairBag ConfusionPairBag::from_json(const nlohmann::json& j) {
  ConfusionPairBag bag(j.at("num_classes").get<int>());
  for (const auto& [key, value] : j.at("pairs").items()) {
    const auto comma = key.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error("bag json: bad pair key '" + key + "'");
    const int t = std::stoi(key.substr(0, comma));
    const int m = std::stoi(key.substr(comma + 1));
    const auto count = value.get<long long>();
    if (count < 1) throw std::runtime_error("bag json: nonpositive multiplicity");
    for (long long k = 0; k < count; ++k) bag.record(t, m);
  }
  return bag;
}

std::vector<CpPair> build_cp_batch(const ConfusionPairBag& bag, const ClassIndex& index,
                                   std::size_t batch_size, Rng& rng) {
  const int c = bag.num_classes();
  if (index.num_classes() != c)
    throw std::invalid_argument("build_cp_batch: bag/index class count mismatch");
  for (int k = 0; k < c; ++k)
    if (index.rows[static_cast<std::size_t>(k)].empty())
      throw std::invalid_argument("build_cp_batch: class " + std::to_string(k) +
                                  " is empty");

  std::vector<CpPair> batch(batch_size);
  for (auto& pair : batch) {
    pair.class_t = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(c)));
    pair.class_m = bag.sample_confused_class(pair.class_t, rng);
    const auto& rows_t = index.rows[static_cast<std::size_t>(pair.class_t)];
    const auto& rows_m = index.rows[static_cast<std::size_t>(pair.class_m)];
    pair.row_t = rows_t[rng.bounded(rows_t.size())];
    pair.row_m = rows_m[rng.bounded(rows_m.size())];
  }
  return batch;
}

}  // namespace cpmix
