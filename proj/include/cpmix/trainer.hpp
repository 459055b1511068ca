#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cpmix/confusion.hpp"
#include "cpmix/dataset.hpp"
#include "cpmix/mixing.hpp"
#include "cpmix/mlp.hpp"
#include "cpmix/optimizer.hpp"

namespace cpmix {

enum class LrDecay { constant, multistep, cosine };

struct LrSchedule {
  LrDecay kind = LrDecay::constant;
  std::vector<int> decay_epochs;  // multistep: lr drops after these epochs
  double decay_factor = 0.1;

  double lr_at(double base_lr, int epoch, int total_epochs) const;
};

struct FinetuneConfig {
  bool enabled = false;
  int epochs = 0;
  double learning_rate = 0.1;
  double momentum = 0.9;
};

struct TrainSchedule {
  int epochs = 10;
  int stage1_epochs = -1;   // -1: two thirds of the run, per the default split
  int batch_size = 100;
  int mix_batch_size = 0;   // 0: same as batch_size
  OptimizerConfig optimizer;
  LrSchedule lr;
  std::uint64_t seed = 1;
  FinetuneConfig finetune;

  int resolved_stage1() const { return stage1_epochs < 0 ? 2 * epochs / 3 : stage1_epochs; }
  int resolved_mix_batch() const { return mix_batch_size > 0 ? mix_batch_size : batch_size; }
  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double erm_loss = 0.0;
  std::optional<double> cp_loss;   // absent during stage 1
  std::optional<double> mix_loss;  // absent during stage 1
  double train_accuracy = 0.0;
  long long bag_total = 0;
  double test_top1 = 0.0;
  std::optional<double> many_acc, medium_acc, few_acc;
  double wall_sec = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  double total_wall_sec = 0.0;

  void save_jsonl(const std::string& path) const;
};

struct ErmResult {
  ConfusionMatrix test_confusion;
  TrainLog log;
};

// Plain mini-batch training; the baseline arm and stage 1 of the full loop.
ErmResult train_erm(MlpClassifier& model, const LabeledDataset& train,
                    const LabeledDataset& test, const TrainSchedule& schedule,
                    LossKind loss, Rng& rng);

// Every batch replaced by permutation-paired mixed examples; cross-entropy on
// the soft labels.
TrainLog train_vanilla_mixup(MlpClassifier& model, const LabeledDataset& train,
                             const LabeledDataset& test, const TrainSchedule& schedule,
                             double alpha, Rng& rng);

struct CpMixResult {
  ConfusionPairBag bag;
  TrainLog log;
};

// Two-stage loop: balanced-softmax ERM with confusion-pair collection from
// the first epoch, then (after stage1_epochs) two extra regularizers per
// batch: a CP-mixed batch and a permutation-mixed batch from the in-hand
// samples, both under soft-label cross-entropy. Gradients accumulate in the
// fixed order ERM, CP, mix.
CpMixResult train_cpmix(MlpClassifier& model, const LabeledDataset& train,
                        const LabeledDataset& test, const TrainSchedule& schedule,
                        const MixConfig& mix, Rng& rng);

// Class-balanced fine-tuning of the final linear layer; every other layer
// stays frozen bit for bit.
void finetune_classifier(MlpClassifier& model, const LabeledDataset& train,
                         const TrainSchedule& schedule, Rng& rng);

}  // namespace cpmix
