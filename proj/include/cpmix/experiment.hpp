#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cpmix/dataset.hpp"
#include "cpmix/metrics.hpp"
#include "cpmix/mixing.hpp"
#include "cpmix/trainer.hpp"

namespace cpmix {

struct ExperimentConfig {
  std::string dataset = "toy";  // toy | blobs | csv
  std::string train_csv;        // csv dataset only
  std::string test_csv;
  double rho = 20.0;
  std::uint64_t dataset_seed = 42;
  std::vector<std::string> methods{"cpmix"};  // erm_ce | erm_bs | mixup | cpmix
  std::vector<int> hidden_dims{100};
  MixConfig mix;
  TrainSchedule schedule;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string out_dir = "runs";
  SubgroupThresholds thresholds;
  int group_size = 1;

  void validate() const;  // ConfigError naming the offending field
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// Flat `key = value` lines; '#' starts a comment. Unknown keys and malformed
// values surface as ConfigError.
KeyValues parse_config_file(const std::string& path);

// Later occurrences override earlier ones, so callers append CLI overrides
// after file entries. Dataset-specific schedule defaults are applied before
// any explicit key.
ExperimentConfig build_config(const KeyValues& kvs);

// All config keys, for mirroring into CLI flags.
std::vector<std::string> config_keys();

struct RunSummary {
  std::string method;
  std::uint64_t seed = 0;
  std::string dir;
  MetricsReport metrics;
};

// One subdirectory per (method, seed) under out_dir with metrics.json,
// confusion.csv, trainlog.jsonl, model.bin and, for cpmix, bag.json.
std::vector<RunSummary> run_experiment(const ExperimentConfig& config);

// Reruns the experiment grid per rho and appends
// rho,method,seed,top1,minority_recall,target_confusion_sum rows to
// out_dir/sweep.csv.
std::string sweep(const ExperimentConfig& config, const std::vector<double>& rho_list);

// Toy dataset: mean recall of the two minority classes; otherwise the
// few-subgroup accuracy.
double minority_recall(const ExperimentConfig& config, const MetricsReport& report);

// Toy dataset: misclassifications from each minority into its adjacent
// majority (2->1 plus 3->0); otherwise all off-diagonal mass.
double target_confusion_sum(const ExperimentConfig& config, const MetricsReport& report);

// Materializes the configured dataset pair (train, test).
std::pair<LabeledDataset, LabeledDataset> make_datasets(const ExperimentConfig& config);

}  // namespace cpmix
