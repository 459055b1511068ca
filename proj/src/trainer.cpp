#include "cpmix/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "cpmix/datagen.hpp"
#include "cpmix/errors.hpp"

namespace cpmix {

double LrSchedule::lr_at(double base_lr, int epoch, int total_epochs) const {
  switch (kind) {
    case LrDecay::constant:
      return base_lr;
    case LrDecay::multistep: {
      double lr = base_lr;
      for (int point : decay_epochs)
        if (epoch > point) lr *= decay_factor;
      return lr;
    }
    case LrDecay::cosine:
      return base_lr * 0.5 *
             (1.0 + std::cos(M_PI * static_cast<double>(epoch - 1) /
                             std::max(1, total_epochs)));
  }
  return base_lr;
}

void TrainSchedule::validate() const {
  if (epochs < 0) throw ConfigError("schedule: epochs must be >= 0");
  if (stage1_epochs > epochs)
    throw ConfigError("schedule: stage1_epochs must be <= epochs");
  if (batch_size < 1) throw ConfigError("schedule: batch_size must be >= 1");
  if (mix_batch_size < 0) throw ConfigError("schedule: mix_batch_size must be >= 0");
  if (finetune.enabled && finetune.epochs < 0)
    throw ConfigError("schedule: finetune epochs must be >= 0");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Test-set pass: top-1 plus unweighted subgroup means keyed on the training
// counts (many > 100, few < 20).
struct TestSnapshot {
  double top1 = 0.0;
  std::optional<double> many, medium, few;
};

TestSnapshot snapshot_test(const MlpClassifier& model, const LabeledDataset& test,
                           std::span<const int> train_counts) {
  const int c = test.num_classes();
  std::vector<long long> correct(static_cast<std::size_t>(c), 0);
  std::vector<long long> seen(static_cast<std::size_t>(c), 0);
  long long hits = 0;
  for (std::size_t r = 0; r < test.size(); ++r) {
    const int truth = test.labels[r];
    ++seen[static_cast<std::size_t>(truth)];
    if (model.predict(test.features.row(r)) == truth) {
      ++correct[static_cast<std::size_t>(truth)];
      ++hits;
    }
  }
  TestSnapshot snap;
  snap.top1 = test.size() ? static_cast<double>(hits) / test.size() : 0.0;
  double sums[3] = {0, 0, 0};
  int counts[3] = {0, 0, 0};
  for (int k = 0; k < c; ++k) {
    if (seen[static_cast<std::size_t>(k)] == 0) continue;
    const int n = k < static_cast<int>(train_counts.size())
                      ? train_counts[static_cast<std::size_t>(k)]
                      : 0;
    const int group = n > 100 ? 0 : (n < 20 ? 2 : 1);
    sums[group] += static_cast<double>(correct[static_cast<std::size_t>(k)]) /
                   seen[static_cast<std::size_t>(k)];
    ++counts[group];
  }
  if (counts[0]) snap.many = sums[0] / counts[0];
  if (counts[1]) snap.medium = sums[1] / counts[1];
  if (counts[2]) snap.few = sums[2] / counts[2];
  return snap;
}

void fill_batch(const LabeledDataset& data, std::span<const std::size_t> rows,
                Matrix& x, std::vector<int>& y) {
  x = Matrix(rows.size(), data.dim());
  y.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = data.features.row(rows[i]);
    std::copy(src.begin(), src.end(), x.row(i).begin());
    y[i] = data.labels[rows[i]];
  }
}

std::vector<SoftLabel> one_hot_targets(std::span<const int> labels, int num_classes) {
  std::vector<SoftLabel> t;
  t.reserve(labels.size());
  for (int y : labels) t.push_back(SoftLabel::one_hot(y, num_classes));
  return t;
}

[[noreturn]] void numeric_abort(int epoch, std::size_t batch, const NumericError& e) {
  throw NumericError("epoch " + std::to_string(epoch) + " batch " +
                     std::to_string(batch) + ": " + e.what());
}

}  // namespace

void TrainLog::save_jsonl(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open train log for writing: " + path);
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  for (const EpochRecord& r : epochs) {
    nlohmann::json j;
    j["epoch"] = r.epoch;
    j["erm_loss"] = r.erm_loss;
    j["cp_loss"] = opt(r.cp_loss);
    j["mix_loss"] = opt(r.mix_loss);
    j["train_accuracy"] = r.train_accuracy;
    j["bag_total"] = r.bag_total;
    j["test_top1"] = r.test_top1;
    j["many_acc"] = opt(r.many_acc);
    j["medium_acc"] = opt(r.medium_acc);
    j["few_acc"] = opt(r.few_acc);
    j["wall_sec"] = r.wall_sec;
    os << j.dump() << '\n';
  }
}

ErmResult train_erm(MlpClassifier& model, const LabeledDataset& train,
                    const LabeledDataset& test, const TrainSchedule& schedule,
                    LossKind loss, Rng& rng) {
  schedule.validate();
  if (model.input_dim() != train.dim() ||
      static_cast<int>(model.output_dim()) != train.num_classes())
    throw std::invalid_argument("train_erm: model/data dimension mismatch");

  const auto run_start = Clock::now();
  const double base_lr = schedule.optimizer.learning_rate;
  OptimizerState opt(schedule.optimizer, model);
  const std::span<const int> counts =
      loss == LossKind::balanced_softmax ? std::span<const int>(train.class_counts)
                                         : std::span<const int>();

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  ErmResult result{ConfusionMatrix(train.num_classes()), {}};
  Matrix batch_x;
  std::vector<int> batch_y;

  for (int epoch = 1; epoch <= schedule.epochs; ++epoch) {
    const auto epoch_start = Clock::now();
    opt.set_learning_rate(schedule.lr.lr_at(base_lr, epoch, schedule.epochs));
    rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    long long correct = 0;
    for (std::size_t off = 0; off < order.size(); off += schedule.batch_size) {
      const std::size_t len =
          std::min<std::size_t>(schedule.batch_size, order.size() - off);
      fill_batch(train, {order.data() + off, len}, batch_x, batch_y);
      try {
        const BackwardResult back =
            backward(model, batch_x, one_hot_targets(batch_y, train.num_classes()),
                     loss, counts);
        opt.step(model, back.grads);
        loss_sum += back.mean_loss;
        for (std::size_t i = 0; i < len; ++i)
          if (back.predictions[i] == batch_y[i]) ++correct;
      } catch (const NumericError& e) {
        numeric_abort(epoch, batches, e);
      }
      ++batches;
    }

    const TestSnapshot snap = snapshot_test(model, test, train.class_counts);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.erm_loss = batches ? loss_sum / static_cast<double>(batches) : 0.0;
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(train.size());
    rec.test_top1 = snap.top1;
    rec.many_acc = snap.many;
    rec.medium_acc = snap.medium;
    rec.few_acc = snap.few;
    rec.wall_sec = seconds_since(epoch_start);
    result.log.epochs.push_back(std::move(rec));
  }

  result.test_confusion = confusion_matrix(model, test);
  result.log.total_wall_sec = seconds_since(run_start);
  return result;
}

TrainLog train_vanilla_mixup(MlpClassifier& model, const LabeledDataset& train,
                             const LabeledDataset& test, const TrainSchedule& schedule,
                             double alpha, Rng& rng) {
  schedule.validate();
  if (model.input_dim() != train.dim() ||
      static_cast<int>(model.output_dim()) != train.num_classes())
    throw std::invalid_argument("train_vanilla_mixup: model/data dimension mismatch");

  const auto run_start = Clock::now();
  const int num_classes = train.num_classes();
  const double base_lr = schedule.optimizer.learning_rate;
  OptimizerState opt(schedule.optimizer, model);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainLog log;
  for (int epoch = 1; epoch <= schedule.epochs; ++epoch) {
    const auto epoch_start = Clock::now();
    opt.set_learning_rate(schedule.lr.lr_at(base_lr, epoch, schedule.epochs));
    rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t off = 0; off < order.size(); off += schedule.batch_size) {
      const std::size_t len =
          std::min<std::size_t>(schedule.batch_size, order.size() - off);
      std::vector<std::size_t> perm(len);
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      rng.shuffle(perm);

      Matrix mixed_x(len, train.dim());
      std::vector<SoftLabel> mixed_y;
      mixed_y.reserve(len);
      for (std::size_t i = 0; i < len; ++i) {
        const std::size_t a = order[off + i];
        const std::size_t b = order[off + perm[i]];
        const double lambda = sample_lambda(alpha, rng);
        const auto x = mix_inputs(train.features.row(a), train.features.row(b), lambda);
        std::copy(x.begin(), x.end(), mixed_x.row(i).begin());
        mixed_y.push_back(mix_labels(train.labels[a], train.labels[b], lambda,
                                     num_classes));
      }
      try {
        const BackwardResult back =
            backward(model, mixed_x, mixed_y, LossKind::cross_entropy);
        opt.step(model, back.grads);
        loss_sum += back.mean_loss;
      } catch (const NumericError& e) {
        numeric_abort(epoch, batches, e);
      }
      ++batches;
    }

    const TestSnapshot snap = snapshot_test(model, test, train.class_counts);
    long long correct = 0;
    for (std::size_t r = 0; r < train.size(); ++r)
      if (model.predict(train.features.row(r)) == train.labels[r]) ++correct;

    EpochRecord rec;
    rec.epoch = epoch;
    rec.erm_loss = batches ? loss_sum / static_cast<double>(batches) : 0.0;
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(train.size());
    rec.test_top1 = snap.top1;
    rec.many_acc = snap.many;
    rec.medium_acc = snap.medium;
    rec.few_acc = snap.few;
    rec.wall_sec = seconds_since(epoch_start);
    log.epochs.push_back(std::move(rec));
  }
  log.total_wall_sec = seconds_since(run_start);
  return log;
}

CpMixResult train_cpmix(MlpClassifier& model, const LabeledDataset& train,
                        const LabeledDataset& test, const TrainSchedule& schedule,
                        const MixConfig& mix, Rng& rng) {
  schedule.validate();
  mix.validate();
  if (model.input_dim() != train.dim() ||
      static_cast<int>(model.output_dim()) != train.num_classes())
    throw std::invalid_argument("train_cpmix: model/data dimension mismatch");

  const auto run_start = Clock::now();
  const int num_classes = train.num_classes();
  const int stage1 = schedule.resolved_stage1();
  const std::size_t mix_batch = static_cast<std::size_t>(schedule.resolved_mix_batch());
  const double base_lr = schedule.optimizer.learning_rate;
  OptimizerState opt(schedule.optimizer, model);
  const ClassIndex index(train);
  const std::span<const int> counts(train.class_counts);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  CpMixResult result{ConfusionPairBag(num_classes), {}};
  ConfusionPairBag& bag = result.bag;
  Matrix batch_x;
  std::vector<int> batch_y;

  for (int epoch = 1; epoch <= schedule.epochs; ++epoch) {
    const auto epoch_start = Clock::now();
    opt.set_learning_rate(schedule.lr.lr_at(base_lr, epoch, schedule.epochs));
    rng.shuffle(order);
    const bool stage2 = epoch > stage1;

    double erm_sum = 0.0, cp_sum = 0.0, mix_sum = 0.0;
    std::size_t batches = 0;
    long long correct = 0;
    for (std::size_t off = 0; off < order.size(); off += schedule.batch_size) {
      const std::size_t len =
          std::min<std::size_t>(schedule.batch_size, order.size() - off);
      fill_batch(train, {order.data() + off, len}, batch_x, batch_y);
      try {
        BackwardResult erm =
            backward(model, batch_x, one_hot_targets(batch_y, num_classes),
                     LossKind::balanced_softmax, counts);
        // Misclassifications go into the bag every epoch; only the
        // regularizers are gated on the stage.
        bag.record_batch(batch_y, erm.predictions);
        erm_sum += erm.mean_loss;
        for (std::size_t i = 0; i < len; ++i)
          if (erm.predictions[i] == batch_y[i]) ++correct;

        Gradients total = std::move(erm.grads);
        if (stage2) {
          const std::vector<CpPair> pairs = build_cp_batch(bag, index, mix_batch, rng);
          Matrix cp_x(pairs.size(), train.dim());
          std::vector<SoftLabel> cp_y;
          cp_y.reserve(pairs.size());
          for (std::size_t i = 0; i < pairs.size(); ++i) {
            MixedExample ex = cp_mix_pair(train.features.row(pairs[i].row_t),
                                          pairs[i].class_t,
                                          train.features.row(pairs[i].row_m),
                                          pairs[i].class_m, counts, mix, rng);
            std::copy(ex.x_mix.begin(), ex.x_mix.end(), cp_x.row(i).begin());
            cp_y.push_back(std::move(ex.y_mix));
          }
          const BackwardResult cp =
              backward(model, cp_x, cp_y, LossKind::cross_entropy);
          cp_sum += cp.mean_loss;

          // Mixup regularizer over the in-hand batch, permutation-paired,
          // with the same count-aware mixing functions.
          std::vector<std::size_t> perm(len);
          std::iota(perm.begin(), perm.end(), std::size_t{0});
          rng.shuffle(perm);
          Matrix reg_x(len, train.dim());
          std::vector<SoftLabel> reg_y;
          reg_y.reserve(len);
          for (std::size_t i = 0; i < len; ++i) {
            const std::size_t a = order[off + i];
            const std::size_t b = order[off + perm[i]];
            MixedExample ex =
                cp_mix_pair(train.features.row(a), train.labels[a],
                            train.features.row(b), train.labels[b], counts, mix, rng);
            std::copy(ex.x_mix.begin(), ex.x_mix.end(), reg_x.row(i).begin());
            reg_y.push_back(std::move(ex.y_mix));
          }
          const BackwardResult reg =
              backward(model, reg_x, reg_y, LossKind::cross_entropy);
          mix_sum += reg.mean_loss;

          total.add_scaled(cp.grads, mix.gamma_cp);
          total.add_scaled(reg.grads, mix.gamma_mix);
        }
        opt.step(model, total);
      } catch (const NumericError& e) {
        numeric_abort(epoch, batches, e);
      }
      ++batches;
    }

    const TestSnapshot snap = snapshot_test(model, test, train.class_counts);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.erm_loss = batches ? erm_sum / static_cast<double>(batches) : 0.0;
    if (stage2 && batches) {
      rec.cp_loss = cp_sum / static_cast<double>(batches);
      rec.mix_loss = mix_sum / static_cast<double>(batches);
    }
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(train.size());
    rec.bag_total = bag.total();
    rec.test_top1 = snap.top1;
    rec.many_acc = snap.many;
    rec.medium_acc = snap.medium;
    rec.few_acc = snap.few;
    rec.wall_sec = seconds_since(epoch_start);
    result.log.epochs.push_back(std::move(rec));
  }
  result.log.total_wall_sec = seconds_since(run_start);
  return result;
}

void finetune_classifier(MlpClassifier& model, const LabeledDataset& train,
                         const TrainSchedule& schedule, Rng& rng) {
  schedule.validate();
  if (!schedule.finetune.enabled)
    throw std::invalid_argument("finetune_classifier: finetune not enabled");
  if (schedule.finetune.epochs == 0) return;

  const int num_classes = train.num_classes();
  const std::size_t last = model.num_layers() - 1;
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::sgd_momentum;
  cfg.learning_rate = schedule.finetune.learning_rate;
  cfg.momentum = schedule.finetune.momentum;
  cfg.weight_decay = 0.0;
  OptimizerState opt(cfg, model);

  ClassBalancedSampler sampler(train, rng.next());
  const std::size_t steps_per_epoch =
      (train.size() + schedule.batch_size - 1) / static_cast<std::size_t>(schedule.batch_size);

  Matrix batch_x;
  std::vector<int> batch_y;
  std::vector<std::size_t> rows(static_cast<std::size_t>(schedule.batch_size));
  for (int epoch = 1; epoch <= schedule.finetune.epochs; ++epoch) {
    for (std::size_t s = 0; s < steps_per_epoch; ++s) {
      for (auto& r : rows) r = sampler.next();
      fill_batch(train, rows, batch_x, batch_y);
      try {
        BackwardResult back =
            backward(model, batch_x, one_hot_targets(batch_y, num_classes),
                     LossKind::cross_entropy);
        // Zeroed gradients plus zero-initialized momentum keep every frozen
        // layer bit-identical through the update.
        for (std::size_t l = 0; l < last; ++l) {
          std::fill(back.grads.weights[l].data.begin(),
                    back.grads.weights[l].data.end(), 0.0);
          std::fill(back.grads.biases[l].begin(), back.grads.biases[l].end(), 0.0);
        }
        opt.step(model, back.grads);
      } catch (const NumericError& e) {
        numeric_abort(epoch, s, e);
      }
    }
  }
}

}  // namespace cpmix
