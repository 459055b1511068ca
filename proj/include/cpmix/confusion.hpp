#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cpmix/dataset.hpp"
#include "cpmix/mlp.hpp"
#include "cpmix/rng.hpp"

namespace cpmix {

// C x C prediction tally; rows are true classes, columns predictions.
struct ConfusionMatrix {
  int num_classes = 0;
  std::vector<long long> counts;  // row-major

  ConfusionMatrix() = default;
  explicit ConfusionMatrix(int c)
      : num_classes(c), counts(static_cast<std::size_t>(c) * c, 0) {}

  long long& at(int t, int p) { return counts[static_cast<std::size_t>(t) * num_classes + p]; }
  long long at(int t, int p) const {
    return counts[static_cast<std::size_t>(t) * num_classes + p];
  }
  long long row_sum(int t) const;
  long long trace() const;
  long long total() const;
  long long off_diagonal_total() const;

  void save_csv(const std::string& path) const;
  static ConfusionMatrix load_csv(const std::string& path);
};

ConfusionMatrix confusion_matrix(const MlpClassifier& model, const LabeledDataset& data);

// All C*(C-1) off-diagonal entries, descending.
std::vector<long long> confusion_histogram(const ConfusionMatrix& matrix);

// Accumulated multiset of (true class, predicted class) misclassification
// pairs. Append-only during training; an exponential decay is available
// behind apply_decay() for ablations and is never called by default.
class ConfusionPairBag {
 public:
  explicit ConfusionPairBag(int num_classes);

  void record(int true_class, int pred_class);  // requires true != pred
  void record_batch(std::span<const int> truths, std::span<const int> preds);

  int num_classes() const { return static_cast<int>(by_true_.size()); }
  long long total() const { return total_; }
  long long per_true_total(int c) const {
    return per_true_total_[static_cast<std::size_t>(c)];
  }
  long long multiplicity(int true_class, int pred_class) const;

  // Frequency-weighted draw of a confused counterpart for true_class; falls
  // back to uniform over the other classes when nothing was recorded. The
  // uniform_support flavour ignores multiplicities.
  int sample_confused_class(int true_class, Rng& rng,
                            bool frequency_weighted = true) const;

  // Multiplies every multiplicity by factor (rounding down, dropping zeros).
  void apply_decay(double factor);

  nlohmann::json to_json() const;
  static ConfusionPairBag from_json(const nlohmann::json& j);

  // Counts sample_confused_class calls; lets tests assert stage gating.
  mutable long long sample_queries = 0;

 private:
  std::vector<std::map<int, long long>> by_true_;
  std::vector<long long> per_true_total_;
  long long total_ = 0;
};

struct CpPair {
  std::size_t row_t = 0;
  int class_t = 0;
  std::size_t row_m = 0;
  int class_m = 0;
};

// Algorithm: true class uniform over all classes (not the bag's marginal),
// counterpart via sample_confused_class, rows uniform with replacement.
std::vector<CpPair> build_cp_batch(const ConfusionPairBag& bag, const ClassIndex& index,
                                   std::size_t batch_size, Rng& rng);

}  // namespace cpmix
