#include "cpmix/metrics.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace cpmix {

MetricsReport evaluate(const MlpClassifier& model, const LabeledDataset& test,
                       std::span<const int> train_counts,
                       SubgroupThresholds thresholds, int group_size) {
  const int c = test.num_classes();
  if (static_cast<int>(model.output_dim()) != c)
    throw std::invalid_argument("evaluate: model output dim != class count");

  MetricsReport report;
  report.confusion = confusion_matrix(model, test);

  report.per_class_acc.assign(static_cast<std::size_t>(c),
                              std::numeric_limits<double>::quiet_NaN());
  long long hits = 0;
  for (int k = 0; k < c; ++k) {
    const long long seen = report.confusion.row_sum(k);
    hits += report.confusion.at(k, k);
    if (seen > 0)
      report.per_class_acc[static_cast<std::size_t>(k)] =
          static_cast<double>(report.confusion.at(k, k)) / static_cast<double>(seen);
  }
  report.top1 = test.size() ? static_cast<double>(hits) / test.size() : 0.0;

  double sums[3] = {0, 0, 0};
  int counts[3] = {0, 0, 0};
  for (int k = 0; k < c; ++k) {
    const double acc = report.per_class_acc[static_cast<std::size_t>(k)];
    if (std::isnan(acc)) continue;
    const int n = k < static_cast<int>(train_counts.size())
                      ? train_counts[static_cast<std::size_t>(k)]
                      : 0;
    const int group = n > thresholds.many_min ? 0 : (n < thresholds.few_max ? 2 : 1);
    sums[group] += acc;
    ++counts[group];
  }
  if (counts[0]) report.many_acc = sums[0] / counts[0];
  if (counts[1]) report.medium_acc = sums[1] / counts[1];
  if (counts[2]) report.few_acc = sums[2] / counts[2];

  report.confusion_hist = confusion_histogram(report.confusion);
  report.grouped = group_confusion(report.confusion, group_size);
  return report;
}

GroupedConfusion group_confusion(const ConfusionMatrix& matrix, int group_size) {
  if (group_size < 1) throw std::invalid_argument("group_confusion: group_size >= 1");
  GroupedConfusion g;
  g.group_size = group_size;
  g.groups = (matrix.num_classes + group_size - 1) / group_size;
  g.counts.assign(static_cast<std::size_t>(g.groups) * g.groups, 0);
  for (int t = 0; t < matrix.num_classes; ++t)
    for (int p = 0; p < matrix.num_classes; ++p)
      g.counts[static_cast<std::size_t>(t / group_size) * g.groups + p / group_size] +=
          matrix.at(t, p);
  return g;
}

nlohmann::json MetricsReport::to_json() const {
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  nlohmann::json j;
  j["top1"] = top1;
  j["per_class_acc"] = per_class_acc;  // NaN serializes as null
  j["subgroup_acc"] = {{"many", opt(many_acc)},
                       {"medium", opt(medium_acc)},
                       {"few", opt(few_acc)}};
  j["num_classes"] = confusion.num_classes;
  j["confusion"] = confusion.counts;
  j["confusion_hist"] = confusion_hist;
  j["group_size"] = grouped.group_size;
  j["grouped_confusion"] = grouped.counts;
  return j;
}

void MetricsReport::save_json(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open metrics file for writing: " + path);
  os << to_json().dump(2) << '\n';
}

}  // namespace cpmix
