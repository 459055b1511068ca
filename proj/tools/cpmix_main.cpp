// Command-line front end: dataset generation, training runs, evaluation,
// imbalance sweeps and result summaries. Every config key is mirrored as a
// flag; flags override config-file entries which override defaults.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cpmix/datagen.hpp"
#include "cpmix/errors.hpp"
#include "cpmix/experiment.hpp"

namespace fs = std::filesystem;
using namespace cpmix;

namespace {

// Collects --<key> overrides for every config key on a subcommand.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> values;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "config file (key = value lines)");
    for (const std::string& key : config_keys()) {
      auto* slot = &values;
      cmd->add_option_function<std::string>(
             "--" + key,
             [slot, key](const std::string& v) { (*slot)[key] = v; },
             "override config key '" + key + "'")
          ->expected(1);
    }
  }

  ExperimentConfig build() const {
    KeyValues kvs;
    if (!config_path.empty()) kvs = parse_config_file(config_path);
    for (const auto& [key, value] : values) kvs.emplace_back(key, value);
    return build_config(kvs);
  }
};

int cmd_gen_data(const std::string& dataset, double rho, std::uint64_t seed,
                 const std::string& out_dir, std::string name) {
  KeyValues kvs{{"dataset", dataset}};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", rho);
  kvs.emplace_back("rho", buf);
  kvs.emplace_back("dataset_seed", std::to_string(seed));
  const ExperimentConfig config = build_config(kvs);
  if (config.dataset == "csv")
    throw ConfigError("gen-data: dataset must be toy or blobs");

  auto [train, test] = make_datasets(config);
  if (name.empty()) name = dataset;
  fs::create_directories(out_dir);
  const fs::path base = fs::path(out_dir) / name;
  save_csv(train, base.string() + "_train.csv");
  save_metadata(train, base.string() + "_train.csv.meta.json");
  save_csv(test, base.string() + "_test.csv");
  save_metadata(test, base.string() + "_test.csv.meta.json");
  std::cout << "wrote " << base.string() << "_{train,test}.csv (train N="
            << train.size() << ", C=" << train.num_classes()
            << ", rho=" << train.imbalance_factor() << ")\n";
  return 0;
}

int cmd_train(const ConfigFlags& flags) {
  const ExperimentConfig config = flags.build();
  const auto summaries = run_experiment(config);
  for (const RunSummary& s : summaries) {
    std::printf("%-8s seed %-4llu top1 %.4f", s.method.c_str(),
                static_cast<unsigned long long>(s.seed), s.metrics.top1);
    if (s.metrics.few_acc) std::printf("  few %.4f", *s.metrics.few_acc);
    std::printf("  -> %s\n", s.dir.c_str());
  }
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& test_csv,
             const std::string& train_csv, const std::string& out, int group_size) {
  const MlpClassifier model = MlpClassifier::load(model_path);
  const LabeledDataset test = load_csv(test_csv);
  const LabeledDataset train = load_csv(train_csv);
  const MetricsReport report =
      evaluate(model, test, train.class_counts, SubgroupThresholds{}, group_size);
  if (!out.empty()) report.save_json(out);
  std::printf("top1 %.4f\n", report.top1);
  if (report.many_acc) std::printf("many    %.4f\n", *report.many_acc);
  if (report.medium_acc) std::printf("medium  %.4f\n", *report.medium_acc);
  if (report.few_acc) std::printf("few     %.4f\n", *report.few_acc);
  return 0;
}

int cmd_sweep(const ConfigFlags& flags, const std::vector<double>& rhos) {
  const ExperimentConfig config = flags.build();
  const std::string csv = sweep(config, rhos);
  std::cout << "wrote " << csv << "\n";
  return 0;
}

int cmd_report(const std::string& dir) {
  // Aggregate every metrics.json below dir, keyed by its run directory
  // (everything above the seed<k> component).
  struct Agg {
    int runs = 0;
    double top1_sum = 0.0, top1_sq = 0.0;
    double few_sum = 0.0;
    int few_runs = 0;
  };
  std::map<std::string, Agg> by_key;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().filename() != "metrics.json")
      continue;
    std::ifstream is(entry.path());
    const auto j = nlohmann::json::parse(is);
    const fs::path rel = fs::relative(entry.path(), dir);
    const std::string key = rel.parent_path().parent_path().string();
    Agg& agg = by_key[key];
    ++agg.runs;
    const double top1 = j.at("top1").get<double>();
    agg.top1_sum += top1;
    agg.top1_sq += top1 * top1;
    const auto& few = j.at("subgroup_acc").at("few");
    if (!few.is_null()) {
      agg.few_sum += few.get<double>();
      ++agg.few_runs;
    }
  }
  if (by_key.empty()) {
    std::cout << "no metrics.json found under " << dir << "\n";
    return 0;
  }
  std::printf("%-32s %5s %8s %8s %8s\n", "run", "seeds", "top1", "std", "few");
  for (const auto& [key, agg] : by_key) {
    const double mean = agg.top1_sum / agg.runs;
    const double var = agg.top1_sq / agg.runs - mean * mean;
    std::printf("%-32s %5d %8.4f %8.4f", key.c_str(), agg.runs, mean,
                std::sqrt(std::max(0.0, var)));
    if (agg.few_runs)
      std::printf(" %8.4f\n", agg.few_sum / agg.few_runs);
    else
      std::printf(" %8s\n", "-");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Long-tailed classification toolkit: confusion-pairing mixup"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-data", "generate a dataset as CSV + metadata");
  std::string gen_dataset = "toy";
  double gen_rho = 20.0;
  std::uint64_t gen_seed = 42;
  std::string gen_out = "data";
  std::string gen_name;
  gen->add_option("--dataset", gen_dataset, "toy or blobs");
  gen->add_option("--rho", gen_rho, "imbalance factor");
  gen->add_option("--seed", gen_seed, "generation seed");
  gen->add_option("--out", gen_out, "output directory");
  gen->add_option("--name", gen_name, "basename for the CSV files");

  auto* train = app.add_subcommand("train", "run methods x seeds and emit artifacts");
  ConfigFlags train_flags;
  train_flags.attach(train);

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a saved model on a CSV");
  std::string eval_model, eval_test, eval_train, eval_out;
  int eval_group_size = 1;
  eval_cmd->add_option("--model", eval_model, "model.bin path")->required();
  eval_cmd->add_option("--test-csv", eval_test, "test CSV")->required();
  eval_cmd->add_option("--train-csv", eval_train, "training CSV (for subgroup counts)")
      ->required();
  eval_cmd->add_option("--out", eval_out, "metrics JSON output path");
  eval_cmd->add_option("--group-size", eval_group_size, "confusion grouping size");

  auto* sweep_cmd = app.add_subcommand("sweep", "repeat the run grid over rho values");
  ConfigFlags sweep_flags;
  sweep_flags.attach(sweep_cmd);
  std::vector<double> sweep_rhos;
  sweep_cmd->add_option("--rhos", sweep_rhos, "imbalance factors")
      ->required()
      ->delimiter(',');

  auto* report_cmd = app.add_subcommand("report", "summarize metrics under a directory");
  std::string report_dir = "runs";
  report_cmd->add_option("--dir", report_dir, "directory to scan");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed())
      return cmd_gen_data(gen_dataset, gen_rho, gen_seed, gen_out, gen_name);
    if (train->parsed()) return cmd_train(train_flags);
    if (eval_cmd->parsed())
      return cmd_eval(eval_model, eval_test, eval_train, eval_out, eval_group_size);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep_flags, sweep_rhos);
    if (report_cmd->parsed()) return cmd_report(report_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric abort: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
