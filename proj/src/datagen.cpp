#include "cpmix/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <vector>

namespace cpmix {

namespace {

void append_gaussians(Matrix& features, std::vector<int>& labels,
                      std::span<const double> center, double stddev, int count,
                      int label, Rng& rng) {
  for (int k = 0; k < count; ++k) {
    const std::size_t r = labels.size();
    labels.push_back(label);
    for (std::size_t i = 0; i < features.cols; ++i)
      features.data.push_back(center[i] + stddev * rng.gaussian());
    features.rows = r + 1;
  }
}

}  // namespace

std::pair<LabeledDataset, LabeledDataset> make_toy(const ToySpec& spec,
                                                   std::uint64_t seed) {
  if (spec.n_majority < 1 || spec.n_minority < 1 || spec.n_test_per_class < 1)
    throw std::invalid_argument("make_toy: counts must be positive");
  Rng rng(seed);

  std::array<std::array<double, 2>, 4> centers{
      spec.majority_centers[0], spec.majority_centers[1],
      spec.minority_centers[0], spec.minority_centers[1]};

  Matrix train_x(0, 2);
  std::vector<int> train_y;
  for (int c = 0; c < 4; ++c) {
    const int n = c < 2 ? spec.n_majority : spec.n_minority;
    append_gaussians(train_x, train_y, centers[static_cast<std::size_t>(c)],
                     spec.stddev, n, c, rng);
  }

  Matrix test_x(0, 2);
  std::vector<int> test_y;
  for (int c = 0; c < 4; ++c)
    append_gaussians(test_x, test_y, centers[static_cast<std::size_t>(c)],
                     spec.stddev, spec.n_test_per_class, c, rng);

  return {LabeledDataset::make(std::move(train_x), std::move(train_y), 4, "toy"),
          LabeledDataset::make(std::move(test_x), std::move(test_y), 4, "toy-test")};
}

std::pair<LabeledDataset, LabeledDataset> make_blobs(const BlobsSpec& spec,
                                                     std::uint64_t seed) {
  if (spec.classes < 2) throw std::invalid_argument("make_blobs: need >= 2 classes");
  if (spec.dim < 2) throw std::invalid_argument("make_blobs: need dim >= 2");
  if (spec.per_class < 1 || spec.test_per_class < 1)
    throw std::invalid_argument("make_blobs: counts must be positive");
  Rng rng(seed);

  std::vector<std::vector<double>> centers(static_cast<std::size_t>(spec.classes));
  for (int c = 0; c < spec.classes; ++c) {
    const double angle = 2.0 * M_PI * c / spec.classes;
    auto& center = centers[static_cast<std::size_t>(c)];
    center.assign(static_cast<std::size_t>(spec.dim), 0.0);
    center[0] = spec.radius * std::cos(angle);
    center[1] = spec.radius * std::sin(angle);
  }

  const auto dim = static_cast<std::size_t>(spec.dim);
  Matrix train_x(0, dim);
  std::vector<int> train_y;
  for (int c = 0; c < spec.classes; ++c)
    append_gaussians(train_x, train_y, centers[static_cast<std::size_t>(c)],
                     spec.stddev, spec.per_class, c, rng);

  Matrix test_x(0, dim);
  std::vector<int> test_y;
  for (int c = 0; c < spec.classes; ++c)
    append_gaussians(test_x, test_y, centers[static_cast<std::size_t>(c)],
                     spec.stddev, spec.test_per_class, c, rng);

  return {LabeledDataset::make(std::move(train_x), std::move(train_y), spec.classes,
                               "blobs"),
          LabeledDataset::make(std::move(test_x), std::move(test_y), spec.classes,
                               "blobs-test")};
}

LabeledDataset exponential_imbalance(const LabeledDataset& base, double rho,
                                     std::uint64_t seed) {
  if (!(rho >= 1.0))
    throw std::invalid_argument("exponential_imbalance: rho must be >= 1");
  const int c = base.num_classes();
  if (rho > 1.0 && c < 2)
    throw std::invalid_argument("exponential_imbalance: rho > 1 needs >= 2 classes");

  const double n0 = static_cast<double>(base.class_counts[0]);
  const double mu = c > 1 ? std::pow(rho, -1.0 / (c - 1)) : 1.0;

  ClassIndex index(base);
  Rng rng(seed);
  std::vector<std::size_t> keep;
  for (int i = 0; i < c; ++i) {
    const auto target =
        static_cast<std::size_t>(std::ceil(n0 * std::pow(mu, static_cast<double>(i))));
    if (target < 1)
      throw std::invalid_argument("exponential_imbalance: infeasible imbalance factor");
    auto rows = index.rows[static_cast<std::size_t>(i)];
    if (rows.size() < target)
      throw std::invalid_argument(
          "exponential_imbalance: class " + std::to_string(i) + " has " +
          std::to_string(rows.size()) + " samples, needs " + std::to_string(target));
    rng.shuffle(rows);
    rows.resize(target);
    std::sort(rows.begin(), rows.end());
    keep.insert(keep.end(), rows.begin(), rows.end());
  }

  Matrix features(keep.size(), base.dim());
  std::vector<int> labels(keep.size());
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const auto src = base.features.row(keep[r]);
    std::copy(src.begin(), src.end(), features.row(r).begin());
    labels[r] = base.labels[keep[r]];
  }

  char suffix[32];
  std::snprintf(suffix, sizeof(suffix), "-lt%g", rho);
  return LabeledDataset::make(std::move(features), std::move(labels), c,
                              base.name + suffix);
}

ClassBalancedSampler::ClassBalancedSampler(const LabeledDataset& data,
                                           std::uint64_t seed)
    : index_(data), rng_(seed) {
  for (int c = 0; c < index_.num_classes(); ++c)
    if (index_.rows[static_cast<std::size_t>(c)].empty())
      throw std::invalid_argument("ClassBalancedSampler: class " + std::to_string(c) +
                                  " is empty");
}

std::size_t ClassBalancedSampler::next() {
  const auto c = rng_.bounded(static_cast<std::uint64_t>(index_.num_classes()));
  const auto& rows = index_.rows[c];
  return rows[rng_.bounded(rows.size())];
}

}  // namespace cpmix
