#include "cpmix/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "cpmix/datagen.hpp"
#include "cpmix/errors.hpp"

namespace fs = std::filesystem;

namespace cpmix {

namespace {

const std::vector<std::string> kMethods{"erm_ce", "erm_bs", "mixup", "cpmix"};

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& expect) {
  throw ConfigError("config: field '" + key + "' " + expect + " (got '" + value + "')");
}

double parse_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0') bad_value(key, value, "must be a number");
  return v;
}

long long parse_int(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const long long v = std::strtoll(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0') bad_value(key, value, "must be an integer");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "on" || value == "true" || value == "1") return true;
  if (value == "off" || value == "false" || value == "0") return false;
  bad_value(key, value, "must be on/off");
}

// One setter per config key; the table drives both file parsing and the CLI
// flag surface.
using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::vector<std::pair<std::string, Setter>>& schema() {
  static const std::vector<std::pair<std::string, Setter>> table = {
      {"dataset",
       [](ExperimentConfig& c, const std::string& v) {
         if (v != "toy" && v != "blobs" && v != "csv")
           bad_value("dataset", v, "must be toy, blobs or csv");
         c.dataset = v;
       }},
      {"train_csv", [](ExperimentConfig& c, const std::string& v) { c.train_csv = v; }},
      {"test_csv", [](ExperimentConfig& c, const std::string& v) { c.test_csv = v; }},
      {"rho",
       [](ExperimentConfig& c, const std::string& v) {
         c.rho = parse_double("rho", v);
       }},
      {"dataset_seed",
       [](ExperimentConfig& c, const std::string& v) {
         c.dataset_seed = static_cast<std::uint64_t>(parse_int("dataset_seed", v));
       }},
      {"method",
       [](ExperimentConfig& c, const std::string& v) {
         c.methods = {v};
       }},
      {"methods",
       [](ExperimentConfig& c, const std::string& v) { c.methods = split_list(v); }},
      {"hidden_dims",
       [](ExperimentConfig& c, const std::string& v) {
         c.hidden_dims.clear();
         for (const auto& item : split_list(v))
           c.hidden_dims.push_back(static_cast<int>(parse_int("hidden_dims", item)));
       }},
      {"alpha",
       [](ExperimentConfig& c, const std::string& v) {
         c.mix.alpha = parse_double("alpha", v);
       }},
      {"t",
       [](ExperimentConfig& c, const std::string& v) { c.mix.t = parse_double("t", v); }},
      {"gamma_cp",
       [](ExperimentConfig& c, const std::string& v) {
         c.mix.gamma_cp = parse_double("gamma_cp", v);
       }},
      {"gamma_mix",
       [](ExperimentConfig& c, const std::string& v) {
         c.mix.gamma_mix = parse_double("gamma_mix", v);
       }},
      {"epochs",
       [](ExperimentConfig& c, const std::string& v) {
         c.schedule.epochs = static_cast<int>(parse_int("epochs", v));
       }},
      {"stage1_epochs",
       [](ExperimentConfig& c, const std::string& v) {
         c.schedule.stage1_epochs = static_cast<int>(parse_int("stage1_epochs", v));
       }},
      {"batch_size",
       [](ExperimentConfig& c, const std::string& v) {
         c.schedule.batch_size = static_cast<int>(parse_int("batch_size", v));
       }},
      {"mix_batch_size",
       [](ExperimentConfig& c, const std::string& v) {
         c.schedule.mix_batch_size = static_cast<int>(parse_int("mix_batch_size", v));
       }},
      {"optimizer",
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "sgd_momentum")
           c.schedule.optimizer.kind = OptimizerKind::sgd_momentum;
         else if (v == "adam")
           c.schedule.optimizer.kind = OptimizerKind::adam;
         else
           bad_value("optimizer", v, "must be sgd_momentum or adam");
       }},
      {"learning_rate",
       [](ExperimentConfig& c, const std::string& v) {
         c.schedule.optimizer.learning_rate = parse_double("learning_rate", v);
       }},
      {"momentum",
       [](ExperimentConfig& c, const std::string& v) {
         c.schedule.optimizer.momentum = parse_double("momentum", v);
       }},
      {"weight_decay",
       [](ExperimentConfig& c, const std::string& v) {
         c.schedule.optimizer.weight_decay = parse_double("weight_decay", v);
       }},
      {"lr_schedule",
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "constant")
           c.schedule.lr.kind = LrDecay::constant;
         else if (v == "multistep")
           c.schedule.lr.kind = LrDecay::multistep;
         else if (v == "cosine")
           c.schedule.lr.kind = LrDecay::cosine;
         else
           bad_value("lr_schedule", v, "must be constant, multistep or cosine");
       }},
      {"lr_decay_epochs",
       [](ExperimentConfig& c, const std::string& v) {
         c.schedule.lr.decay_epochs.clear();
         for (const auto& item : split_list(v))
           c.schedule.lr.decay_epochs.push_back(
               static_cast<int>(parse_int("lr_decay_epochs", item)));
       }},
      {"lr_decay_factor",
       [](ExperimentConfig& c, const std::string& v) {
         c.schedule.lr.decay_factor = parse_double("lr_decay_factor", v);
       }},
      {"finetune",
       [](ExperimentConfig& c, const std::string& v) {
         c.schedule.finetune.enabled = parse_bool("finetune", v);
       }},
      {"finetune_epochs",
       [](ExperimentConfig& c, const std::string& v) {
         c.schedule.finetune.epochs = static_cast<int>(parse_int("finetune_epochs", v));
       }},
      {"finetune_lr",
       [](ExperimentConfig& c, const std::string& v) {
         c.schedule.finetune.learning_rate = parse_double("finetune_lr", v);
       }},
      {"seeds",
       [](ExperimentConfig& c, const std::string& v) {
         c.seeds.clear();
         for (const auto& item : split_list(v))
           c.seeds.push_back(static_cast<std::uint64_t>(parse_int("seeds", item)));
       }},
      {"out_dir", [](ExperimentConfig& c, const std::string& v) { c.out_dir = v; }},
      {"many_threshold",
       [](ExperimentConfig& c, const std::string& v) {
         c.thresholds.many_min = static_cast<int>(parse_int("many_threshold", v));
       }},
      {"few_threshold",
       [](ExperimentConfig& c, const std::string& v) {
         c.thresholds.few_max = static_cast<int>(parse_int("few_threshold", v));
       }},
      {"group_size",
       [](ExperimentConfig& c, const std::string& v) {
         c.group_size = static_cast<int>(parse_int("group_size", v));
       }},
  };
  return table;
}

const Setter* find_setter(const std::string& key) {
  for (const auto& [name, setter] : schema())
    if (name == key) return &setter;
  return nullptr;
}

void apply_dataset_defaults(ExperimentConfig& config) {
  if (config.dataset == "blobs") {
    config.rho = 100.0;
    config.schedule.epochs = 60;
    config.schedule.batch_size = 128;
    config.schedule.optimizer.kind = OptimizerKind::sgd_momentum;
    config.schedule.optimizer.learning_rate = 0.1;
    config.schedule.optimizer.momentum = 0.9;
    config.schedule.lr.kind = LrDecay::multistep;
    config.schedule.lr.decay_epochs = {45, 55};
    config.schedule.lr.decay_factor = 0.1;
    // Random-pair mixing is much less informative than confusion pairing on
    // the ring geometry; a lighter mixup-regularizer ratio trains better.
    config.mix.gamma_mix = 0.5;
  } else {
    // Toy protocol: Adam, constant lr 0.1, 10 epochs, batch 100.
    config.rho = 20.0;
    config.schedule.epochs = 10;
    config.schedule.batch_size = 100;
    config.schedule.optimizer.kind = OptimizerKind::adam;
    config.schedule.optimizer.learning_rate = 0.1;
    config.schedule.lr.kind = LrDecay::constant;
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (dataset != "toy" && dataset != "blobs" && dataset != "csv")
    throw ConfigError("config: field 'dataset' must be toy, blobs or csv");
  if (dataset == "csv" && (train_csv.empty() || test_csv.empty()))
    throw ConfigError("config: csv dataset requires 'train_csv' and 'test_csv'");
  if (!(rho >= 1.0)) throw ConfigError("config: field 'rho' must be >= 1");
  if (methods.empty()) throw ConfigError("config: field 'methods' must be nonempty");
  for (const auto& m : methods)
    if (std::find(kMethods.begin(), kMethods.end(), m) == kMethods.end())
      throw ConfigError("config: unknown method '" + m +
                        "' (valid: erm_ce, erm_bs, mixup, cpmix)");
  if (hidden_dims.empty())
    throw ConfigError("config: field 'hidden_dims' must be nonempty");
  for (int d : hidden_dims)
    if (d < 1) throw ConfigError("config: field 'hidden_dims' entries must be >= 1");
  if (seeds.empty()) throw ConfigError("config: field 'seeds' must be nonempty");
  if (!(schedule.optimizer.learning_rate > 0.0))
    throw ConfigError("config: field 'learning_rate' must be > 0");
  if (schedule.epochs < 1) throw ConfigError("config: field 'epochs' must be >= 1");
  if (group_size < 1) throw ConfigError("config: field 'group_size' must be >= 1");
  if (thresholds.few_max > thresholds.many_min)
    throw ConfigError("config: 'few_threshold' must not exceed 'many_threshold'");
  mix.validate();
  schedule.validate();
}

KeyValues parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  KeyValues kvs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    kvs.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return kvs;
}

ExperimentConfig build_config(const KeyValues& kvs) {
  ExperimentConfig config;
  // The dataset decides the schedule defaults, so resolve it first.
  for (const auto& [key, value] : kvs)
    if (key == "dataset") config.dataset = value;
  apply_dataset_defaults(config);
  for (const auto& [key, value] : kvs) {
    const Setter* setter = find_setter(key);
    if (!setter) throw ConfigError("config: unknown key '" + key + "'");
    (*setter)(config, value);
  }
  config.validate();
  return config;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [name, setter] : schema()) keys.push_back(name);
  return keys;
}

std::pair<LabeledDataset, LabeledDataset> make_datasets(const ExperimentConfig& config) {
  if (config.dataset == "toy") {
    ToySpec spec;
    spec.n_minority = std::max(
        1, static_cast<int>(std::lround(spec.n_majority / config.rho)));
    return make_toy(spec, config.dataset_seed);
  }
  if (config.dataset == "blobs") {
    auto [train, test] = make_blobs(BlobsSpec{}, config.dataset_seed);
    return {exponential_imbalance(train, config.rho, config.dataset_seed + 1),
            std::move(test)};
  }
  return {load_csv(config.train_csv), load_csv(config.test_csv)};
}

namespace {

std::vector<std::size_t> model_dims(const ExperimentConfig& config,
                                    const LabeledDataset& train) {
  std::vector<std::size_t> dims{train.dim()};
  for (int h : config.hidden_dims) dims.push_back(static_cast<std::size_t>(h));
  dims.push_back(static_cast<std::size_t>(train.num_classes()));
  return dims;
}

RunSummary run_single(const ExperimentConfig& config, const std::string& method,
                      std::uint64_t seed, const LabeledDataset& train,
                      const LabeledDataset& test, const fs::path& dir) {
  fs::create_directories(dir);

  TrainSchedule schedule = config.schedule;
  schedule.seed = seed;
  Rng rng(seed);
  MlpClassifier model = MlpClassifier::init(model_dims(config, train), rng);

  TrainLog log;
  if (method == "erm_ce") {
    log = train_erm(model, train, test, schedule, LossKind::cross_entropy, rng).log;
  } else if (method == "erm_bs") {
    log = train_erm(model, train, test, schedule, LossKind::balanced_softmax, rng).log;
  } else if (method == "mixup") {
    log = train_vanilla_mixup(model, train, test, schedule, config.mix.alpha, rng);
  } else {
    CpMixResult result = train_cpmix(model, train, test, schedule, config.mix, rng);
    log = std::move(result.log);
    std::ofstream os(dir / "bag.json");
    os << result.bag.to_json().dump(2) << '\n';
  }
  if (schedule.finetune.enabled) finetune_classifier(model, train, schedule, rng);

  RunSummary summary;
  summary.method = method;
  summary.seed = seed;
  summary.dir = dir.string();
  summary.metrics =
      evaluate(model, test, train.class_counts, config.thresholds, config.group_size);

  summary.metrics.save_json((dir / "metrics.json").string());
  summary.metrics.confusion.save_csv((dir / "confusion.csv").string());
  log.save_jsonl((dir / "trainlog.jsonl").string());
  model.save((dir / "model.bin").string());
  return summary;
}

}  // namespace

std::vector<RunSummary> run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto [train, test] = make_datasets(config);
  fs::create_directories(config.out_dir);
  save_metadata(train, (fs::path(config.out_dir) / "dataset.meta.json").string());

  std::vector<RunSummary> summaries;
  for (const auto& method : config.methods)
    for (std::uint64_t seed : config.seeds)
      summaries.push_back(run_single(config, method, seed, train, test,
                                     fs::path(config.out_dir) / method /
                                         ("seed" + std::to_string(seed))));
  return summaries;
}

double minority_recall(const ExperimentConfig& config, const MetricsReport& report) {
  if (config.dataset == "toy" && report.per_class_acc.size() == 4)
    return 0.5 * (report.per_class_acc[2] + report.per_class_acc[3]);
  return report.few_acc ? *report.few_acc : std::numeric_limits<double>::quiet_NaN();
}

double target_confusion_sum(const ExperimentConfig& config,
                            const MetricsReport& report) {
  if (config.dataset == "toy" && report.confusion.num_classes == 4)
    return static_cast<double>(report.confusion.at(2, 1) + report.confusion.at(3, 0));
  return static_cast<double>(report.confusion.off_diagonal_total());
}

std::string sweep(const ExperimentConfig& config, const std::vector<double>& rho_list) {
  config.validate();
  if (rho_list.empty()) throw ConfigError("sweep: empty rho list");
  fs::create_directories(config.out_dir);
  const fs::path csv_path = fs::path(config.out_dir) / "sweep.csv";
  std::ofstream os(csv_path);
  if (!os) throw std::runtime_error("cannot open sweep csv for writing: " +
                                    csv_path.string());
  os << "rho,method,seed,top1,minority_recall,target_confusion_sum\n";

  const auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  char dir_buf[32];
  for (double rho : rho_list) {
    ExperimentConfig run_config = config;
    run_config.rho = rho;
    std::snprintf(dir_buf, sizeof(dir_buf), "rho%g", rho);
    run_config.out_dir = (fs::path(config.out_dir) / dir_buf).string();
    for (const RunSummary& s : run_experiment(run_config)) {
      os << num(rho) << ',' << s.method << ',' << s.seed << ','
         << num(s.metrics.top1) << ',' << num(minority_recall(run_config, s.metrics))
         << ',' << num(target_confusion_sum(run_config, s.metrics)) << '\n';
    }
  }
  return csv_path.string();
}

}  // namespace cpmix
