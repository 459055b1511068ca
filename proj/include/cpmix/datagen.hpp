#pragma once

#include <array>
#include <cstdint>
#include <utility>

#include "cpmix/dataset.hpp"
#include "cpmix/rng.hpp"

namespace cpmix {

// Four Gaussian blobs on the plane: two majority classes (0, 1) and two
// minority classes (2, 3). Class c's adjacent counterpart is the class whose
// center is nearest: minority 2 sits next to majority 1, minority 3 next to
// majority 0.
struct ToySpec {
  std::array<std::array<double, 2>, 2> majority_centers{{{0.0, 1.0}, {1.0, 0.0}}};
  std::array<std::array<double, 2>, 2> minority_centers{{{0.0, -1.0}, {-1.0, 0.0}}};
  double stddev = 0.4;
  int n_majority = 1000;
  int n_minority = 50;
  int n_test_per_class = 1000;

  double rho() const { return static_cast<double>(n_majority) / n_minority; }
};

// Balanced test set with n_test_per_class points per class.
std::pair<LabeledDataset, LabeledDataset> make_toy(const ToySpec& spec,
                                                   std::uint64_t seed);

// Gaussian clusters centered on a ring in the first two of `dim` dimensions;
// the remaining dimensions carry pure noise. Adjacent classes on the ring
// overlap, which is where a long-tailed classifier concentrates its
// confusion. Desk-scale stand-in for exponentially imbalanced benchmarks.
struct BlobsSpec {
  int classes = 20;
  int dim = 10;
  int per_class = 500;
  int test_per_class = 100;
  double radius = 3.0;
  double stddev = 0.4;
};

std::pair<LabeledDataset, LabeledDataset> make_blobs(const BlobsSpec& spec,
                                                     std::uint64_t seed);

// Keeps ceil(n_0 * mu^i) samples of class i, mu = rho^(-1/(C-1)), subsampled
// uniformly without replacement. Ceiling keeps the tail class nonempty.
LabeledDataset exponential_imbalance(const LabeledDataset& base, double rho,
                                     std::uint64_t seed);

// Infinite stream of row indices: class uniform first, then a row uniform
// within the class (with replacement).
class ClassBalancedSampler {
 public:
  ClassBalancedSampler(const LabeledDataset& data, std::uint64_t seed);
  std::size_t next();

 private:
  ClassIndex index_;
  Rng rng_;
};

}  // namespace cpmix
