#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cpmix/confusion.hpp"
#include "cpmix/dataset.hpp"
#include "cpmix/mlp.hpp"

namespace cpmix {

// Subgroup membership is decided by TRAINING-set counts: many means
// n > many_min, few means n < few_max, medium everything between.
struct SubgroupThresholds {
  int many_min = 100;
  int few_max = 20;
};

struct GroupedConfusion {
  int groups = 0;
  int group_size = 1;
  std::vector<long long> counts;  // groups x groups, row-major

  long long at(int t, int p) const {
    return counts[static_cast<std::size_t>(t) * groups + p];
  }
};

struct MetricsReport {
  double top1 = 0.0;
  std::vector<double> per_class_acc;  // NaN for classes absent from the test set
  std::optional<double> many_acc, medium_acc, few_acc;
  ConfusionMatrix confusion;
  std::vector<long long> confusion_hist;
  GroupedConfusion grouped;

  nlohmann::json to_json() const;
  void save_json(const std::string& path) const;
};

MetricsReport evaluate(const MlpClassifier& model, const LabeledDataset& test,
                       std::span<const int> train_counts,
                       SubgroupThresholds thresholds = {}, int group_size = 1);

// Block sums over consecutive classes; a trailing partial group is kept.
GroupedConfusion group_confusion(const ConfusionMatrix& matrix, int group_size);

}  // namespace cpmix
