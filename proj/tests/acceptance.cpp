// Acceptance suite: every criterion runs at its stated tolerance and prints
// one pass/fail line. Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "cpmix/datagen.hpp"
#include "cpmix/experiment.hpp"
#include "oracles.hpp"

using namespace cpmix;
namespace fs = std::filesystem;

namespace {

const fs::path kOutBase = "acceptance_runs";

struct Criterion {
  bool pass = false;
  std::string detail;
};

std::string slurp(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::map<std::uint64_t, MetricsReport> by_seed(const std::vector<RunSummary>& runs,
                                               const std::string& method) {
  std::map<std::uint64_t, MetricsReport> out;
  for (const RunSummary& r : runs)
    if (r.method == method) out.emplace(r.seed, r.metrics);
  return out;
}

double toy_minrec(const MetricsReport& m) {
  return 0.5 * (m.per_class_acc[2] + m.per_class_acc[3]);
}
double toy_majrec(const MetricsReport& m) {
  return 0.5 * (m.per_class_acc[0] + m.per_class_acc[1]);
}
double toy_tcs(const MetricsReport& m) {
  return static_cast<double>(m.confusion.at(2, 1) + m.confusion.at(3, 0));
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t k = 0; k < idx.size(); ++k) r[idx[k]] = static_cast<double>(k);
    return r;
  };
  const std::vector<double> rx = ranks(x);
  const std::vector<double> ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

// ---- 1. gradient correctness ------------------------------------------------

Criterion gradient_correctness() {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    MlpClassifier model = MlpClassifier::init({4, 16, 5}, rng);
    const std::vector<int> counts{400, 90, 33, 8, 2};

    Matrix x(8, 4);
    for (double& v : x.data) v = rng.gaussian();
    std::vector<SoftLabel> hard, mixed;
    MixConfig mix;
    for (int r = 0; r < 8; ++r) {
      hard.push_back(SoftLabel::one_hot(static_cast<int>(rng.bounded(5)), 5));
      const int y1 = static_cast<int>(rng.bounded(5));
      const int y2 = static_cast<int>(rng.bounded(5));
      mixed.push_back(cp_mix_pair(x.row(static_cast<std::size_t>(r)), y1,
                                  x.row(static_cast<std::size_t>(r)), y2, counts, mix,
                                  rng)
                          .y_mix);
    }

    struct Case {
      LossKind kind;
      const std::vector<SoftLabel>* targets;
      std::span<const int> counts;
    };
    const Case cases[] = {
        {LossKind::cross_entropy, &hard, {}},
        {LossKind::balanced_softmax, &hard, counts},
        {LossKind::cross_entropy, &mixed, {}},  // soft labels from cp mixing
    };
    for (const Case& c : cases) {
      const auto analytic =
          oracles::flatten(backward(model, x, *c.targets, c.kind, c.counts).grads);
      const auto loss_of = [&](const MlpClassifier& m) {
        return backward(m, x, *c.targets, c.kind, c.counts).mean_loss;
      };
      worst = std::max(worst,
                       oracles::max_grad_rel_error(model, analytic, loss_of, 50, rng));
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "max rel err %.2e over 20 seeds (tol 1e-4)", worst);
  return {worst < 1e-4, buf};
}

// ---- 2. formula fidelity ----------------------------------------------------

Criterion formula_fidelity() {
  const double ly = label_lambda(0.5, 0.5, 1000, 50);
  const double ly_expect = 0.25 + 0.5 * (50.0 / 1050.0);
  const auto bs = balanced_softmax_loss(std::vector<double>{0.0, 0.0}, 1,
                                        std::vector<int>{1000, 50});
  const double bs_expect = -std::log(50.0 / 1050.0);
  const double err = std::max(std::abs(ly - ly_expect), std::abs(bs.loss - bs_expect));
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "lambda_y=%.10f (want 0.2738095238), bs=%.10f (want 3.0445224377)", ly,
                bs.loss);
  return {err < 1e-9, buf};
}

// ---- 3. confusion oracle equivalence ---------------------------------------

Criterion confusion_oracle() {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    const int classes = 3 + static_cast<int>(rng.bounded(6));
    const int dim = 2 + static_cast<int>(rng.bounded(4));
    BlobsSpec spec;
    spec.classes = classes;
    spec.dim = dim;
    spec.per_class = 10 + static_cast<int>(rng.bounded(90));  // N <= 1000
    spec.test_per_class = 1;
    const auto [data, unused] = make_blobs(spec, seed * 31);
    MlpClassifier model = MlpClassifier::init(
        {static_cast<std::size_t>(dim), 6, static_cast<std::size_t>(classes)}, rng);

    const ConfusionMatrix m = confusion_matrix(model, data);
    ConfusionPairBag bag(classes);
    std::vector<int> preds(data.size());
    for (std::size_t r = 0; r < data.size(); ++r)
      preds[r] = model.predict(data.features.row(r));
    bag.record_batch(data.labels, preds);

    // Naive double loop straight from the confusion definition.
    for (int i = 0; i < classes; ++i)
      for (int j = 0; j < classes; ++j) {
        long long count = 0;
        for (std::size_t r = 0; r < data.size(); ++r)
          if (data.labels[r] == i && model.predict(data.features.row(r)) == j) ++count;
        if (m.at(i, j) != count)
          return {false, "matrix mismatch at seed " + std::to_string(seed)};
        if (i != j && bag.multiplicity(i, j) != count)
          return {false, "bag mismatch at seed " + std::to_string(seed)};
      }
  }
  return {true, "matrix and bag match the naive tally on 20 instances"};
}

// ---- 4. toy reproduction ----------------------------------------------------

Criterion toy_reproduction() {
  const ExperimentConfig config =
      build_config({{"dataset", "toy"},
                    {"methods", "erm_ce,mixup,cpmix"},
                    {"seeds", "1,2,3,4,5"},
                    {"out_dir", (kOutBase / "toy").string()}});
  const auto runs = run_experiment(config);
  const auto erm = by_seed(runs, "erm_ce");
  const auto mixup = by_seed(runs, "mixup");
  const auto cpm = by_seed(runs, "cpmix");

  int bias = 0, mixup_no_gain = 0, tcs_down = 0, minrec_up = 0;
  for (const auto& [seed, m] : erm) {
    if (toy_minrec(m) < toy_majrec(m)) ++bias;
    if (toy_minrec(mixup.at(seed)) <= toy_minrec(m)) ++mixup_no_gain;
    if (toy_tcs(cpm.at(seed)) < toy_tcs(m)) ++tcs_down;
    if (toy_minrec(cpm.at(seed)) >= toy_minrec(m) + 0.05) ++minrec_up;
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "erm biased %d/5 (need 4), mixup no-gain %d/5 (need 3), "
                "cpmix confusion down %d/5 and minority +5pts %d/5 (need 4)",
                bias, mixup_no_gain, tcs_down, minrec_up);
  return {bias >= 4 && mixup_no_gain >= 3 && tcs_down >= 4 && minrec_up >= 4, buf};
}

// ---- 5. imbalance trend -----------------------------------------------------

Criterion imbalance_trend() {
  const ExperimentConfig config =
      build_config({{"dataset", "toy"},
                    {"method", "erm_ce"},
                    {"seeds", "1,2,3,4,5"},
                    {"out_dir", (kOutBase / "sweep").string()}});
  const std::vector<double> rhos{2, 5, 10, 20, 50};
  const std::string csv = sweep(config, rhos);

  std::map<double, std::pair<double, int>> acc;  // rho -> (tcs sum, runs)
  std::ifstream is(csv);
  std::string line;
  std::getline(is, line);  // header
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    auto& slot = acc[std::stod(fields[0])];
    slot.first += std::stod(fields[5]);
    ++slot.second;
  }
  std::vector<double> xs, means;
  for (const auto& [rho, slot] : acc) {
    xs.push_back(rho);
    means.push_back(slot.first / slot.second);
  }
  const double rs = spearman(xs, means);
  std::ostringstream detail;
  detail << "seed-averaged confusion by rho:";
  for (std::size_t i = 0; i < xs.size(); ++i) detail << " " << xs[i] << "->" << means[i];
  detail << ", spearman " << rs << " (need > 0.8)";
  return {xs.size() == rhos.size() && rs > 0.8, detail.str()};
}

// ---- 6. multi-class desk benchmark -----------------------------------------

Criterion blobs_benchmark() {
  const ExperimentConfig config =
      build_config({{"dataset", "blobs"},
                    {"methods", "erm_ce,mixup,cpmix"},
                    {"seeds", "1,2,3,4,5"},
                    {"out_dir", (kOutBase / "blobs").string()}});
  const auto runs = run_experiment(config);
  const auto erm = by_seed(runs, "erm_ce");
  const auto mixup = by_seed(runs, "mixup");
  const auto cpm = by_seed(runs, "cpmix");

  int beats_erm = 0, beats_mixup = 0, few_up = 0;
  for (const auto& [seed, m] : cpm) {
    if (m.top1 > erm.at(seed).top1) ++beats_erm;
    if (m.top1 > mixup.at(seed).top1) ++beats_mixup;
    if (m.few_acc && erm.at(seed).few_acc && *m.few_acc > *erm.at(seed).few_acc)
      ++few_up;
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "cpmix > erm_ce %d/5, > mixup %d/5, few-group up %d/5 (need 4 each)",
                beats_erm, beats_mixup, few_up);
  return {beats_erm >= 4 && beats_mixup >= 4 && few_up >= 4, buf};
}

// ---- 7. ablation skeleton ---------------------------------------------------

Criterion ablation_skeleton() {
  const std::vector<std::pair<std::string, std::string>> arms{
      {"ce", "ablation_ce.cfg"},
      {"bs", "ablation_bs.cfg"},
      {"bs_mixreg", "ablation_bs_mixreg.cfg"},
      {"cpmix", "ablation_cpmix.cfg"},
  };
  std::map<std::string, std::vector<RunSummary>> results;
  for (const auto& [arm, file] : arms) {
    KeyValues kvs = parse_config_file(std::string(CPMIX_CONFIG_DIR) + "/" + file);
    kvs.emplace_back("out_dir", (kOutBase / "ablation" / arm).string());
    results[arm] = run_experiment(build_config(kvs));
    if (results[arm].size() != 5)
      return {false, "arm " + arm + " did not produce 5 runs"};
    for (const RunSummary& r : results[arm])
      if (!fs::exists(fs::path(r.dir) / "metrics.json"))
        return {false, "arm " + arm + " missing metrics.json"};
  }
  const auto ce = by_seed(results["ce"], "erm_ce");
  const auto bs = by_seed(results["bs"], "erm_bs");
  int bs_wins = 0;
  for (const auto& [seed, m] : bs)
    if (m.top1 >= ce.at(seed).top1) ++bs_wins;
  char buf[96];
  std::snprintf(buf, sizeof(buf), "four arms emitted reports; bs >= ce %d/5 (need 4)",
                bs_wins);
  return {bs_wins >= 4, buf};
}

// ---- 8. determinism ---------------------------------------------------------

Criterion determinism() {
  KeyValues kvs{{"dataset", "toy"},      {"method", "cpmix"},
                {"epochs", "4"},         {"stage1_epochs", "2"},
                {"seeds", "1"},          {"hidden_dims", "16"}};
  kvs.emplace_back("out_dir", (kOutBase / "det_a").string());
  run_experiment(build_config(kvs));
  kvs.emplace_back("out_dir", (kOutBase / "det_b").string());
  run_experiment(build_config(kvs));

  const std::string a = slurp(kOutBase / "det_a" / "cpmix" / "seed1" / "metrics.json");
  const std::string b = slurp(kOutBase / "det_b" / "cpmix" / "seed1" / "metrics.json");
  const std::string ca = slurp(kOutBase / "det_a" / "cpmix" / "seed1" / "confusion.csv");
  const std::string cb = slurp(kOutBase / "det_b" / "cpmix" / "seed1" / "confusion.csv");
  if (a.empty()) return {false, "missing metrics.json"};
  if (a != b) return {false, "metrics.json differs between reruns"};
  if (ca != cb) return {false, "confusion.csv differs between reruns"};
  return {true, "rerun metrics.json and confusion.csv byte-identical"};
}

// ---- 9. sampler statistics --------------------------------------------------

Criterion sampler_statistics() {
  std::ostringstream detail;

  {
    Rng rng(71);
    std::vector<double> s(100000);
    for (double& v : s) v = sample_lambda(1.0, rng);
    const double ks = oracles::ks_vs_uniform(s);
    detail << "ks(alpha=1) " << ks;
    if (ks >= 0.01) return {false, detail.str() + " (need < 0.01)"};
  }
  for (double alpha : {0.5, 1.5, 4.0}) {
    Rng rng(72);
    std::vector<double> s(100000);
    for (double& v : s) v = sample_lambda(alpha, rng);
    if (std::abs(oracles::mean(s) - 0.5) >= 0.01)
      return {false, "beta mean off at alpha " + std::to_string(alpha)};
    if (alpha == 1.5) {
      const double var = oracles::variance(s);
      detail << ", var(alpha=1.5) " << var;
      if (std::abs(var - 0.0625) >= 0.005)
        return {false, detail.str() + " (need 0.0625 +- 0.005)"};
    }
  }

  {
    ConfusionPairBag bag(4);
    for (int k = 0; k < 3; ++k) bag.record(0, 1);
    bag.record(0, 2);
    Rng rng(73);
    long long ones = 0;
    for (int i = 0; i < 100000; ++i)
      if (bag.sample_confused_class(0, rng) == 1) ++ones;
    const double freq = static_cast<double>(ones) / 100000.0;
    detail << ", weighted freq " << freq;
    if (std::abs(freq - 0.75) >= 0.01) return {false, detail.str() + " (need 0.75)"};
  }
  {
    ConfusionPairBag bag(5);
    Rng rng(74);
    std::vector<long long> freq(5, 0);
    for (int i = 0; i < 100000; ++i)
      ++freq[static_cast<std::size_t>(bag.sample_confused_class(1, rng))];
    if (freq[1] != 0) return {false, "empty-bag fallback returned the true class"};
    for (int c = 0; c < 5; ++c) {
      if (c == 1) continue;
      if (std::abs(static_cast<double>(freq[static_cast<std::size_t>(c)]) / 100000.0 -
                   0.25) >= 0.01)
        return {false, "empty-bag fallback marginal off"};
    }
  }

  {
    // Uniform true-class marginal of cp batches under a heavily skewed bag.
    BlobsSpec spec;
    spec.classes = 10;
    spec.dim = 2;
    spec.per_class = 5;
    spec.test_per_class = 1;
    const auto [data, unused] = make_blobs(spec, 75);
    const ClassIndex index(data);
    ConfusionPairBag bag(10);
    for (int k = 0; k < 1000; ++k) bag.record(0, 1);
    bag.record(3, 7);
    Rng rng(76);
    std::vector<long long> counts(10, 0);
    const auto pairs = build_cp_batch(bag, index, 100000, rng);
    for (const CpPair& p : pairs) ++counts[static_cast<std::size_t>(p.class_t)];
    const double chi2 = oracles::chi2_uniform(counts, 100000.0);
    detail << ", marginal chi2 " << chi2;
    // 9 dof critical value at p = 0.001.
    if (chi2 >= 27.877) return {false, detail.str() + " (need < 27.877)"};
  }
  return {true, detail.str()};
}

}  // namespace

int main() {
  fs::remove_all(kOutBase);

  struct Entry {
    const char* name;
    std::function<Criterion()> run;
  };
  const std::vector<Entry> entries{
      {"1 gradient-correctness", gradient_correctness},
      {"2 formula-fidelity", formula_fidelity},
      {"3 confusion-oracle-equivalence", confusion_oracle},
      {"4 toy-reproduction", toy_reproduction},
      {"5 imbalance-trend", imbalance_trend},
      {"6 blobs-benchmark", blobs_benchmark},
      {"7 ablation-skeleton", ablation_skeleton},
      {"8 determinism", determinism},
      {"9 sampler-statistics", sampler_statistics},
  };

  int failures = 0;
  for (const Entry& entry : entries) {
    const auto start = std::chrono::steady_clock::now();
    Criterion result;
    try {
      result = entry.run();
    } catch (const std::exception& e) {
      result = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] %s: %s [%.1fs]\n", result.pass ? "PASS" : "FAIL", entry.name,
                result.detail.c_str(), secs);
    std::fflush(stdout);
    if (!result.pass) ++failures;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(entries.size()) - failures,
              entries.size());
  return failures;
}
