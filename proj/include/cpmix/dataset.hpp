#pragma once

#include <string>
#include <vector>

#include "cpmix/matrix.hpp"

namespace cpmix {

// Feature matrix plus integer class labels. class_counts always matches the
// actual label frequencies and sums to the row count.
struct LabeledDataset {
  Matrix features;          // N x d
  std::vector<int> labels;  // values in {0, ..., C-1}
  std::vector<int> class_counts;
  std::string name;

  std::size_t size() const { return features.rows; }
  std::size_t dim() const { return features.cols; }
  int num_classes() const { return static_cast<int>(class_counts.size()); }

  // n_max / n_min over nonempty classes; 0 if any class is empty.
  double imbalance_factor() const;

  // Validates labels against num_classes and recomputes counts.
  static LabeledDataset make(Matrix features, std::vector<int> labels,
                             int num_classes, std::string name);
};

// Per-class lists of row indices; disjoint, covering all rows.
struct ClassIndex {
  std::vector<std::vector<std::size_t>> rows;

  explicit ClassIndex(const LabeledDataset& data);
  int num_classes() const { return static_cast<int>(rows.size()); }
};

// CSV with header f0,...,f{d-1},label. Malformed rows raise a parse error
// naming the offending line.
LabeledDataset load_csv(const std::string& path);
void save_csv(const LabeledDataset& data, const std::string& path);

// JSON sidecar with name, C, n_c and the imbalance factor.
void save_metadata(const LabeledDataset& data, const std::string& path);

}  // namespace cpmix
