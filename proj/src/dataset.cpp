#include "cpmix/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace cpmix {

double LabeledDataset::imbalance_factor() const {
  int max_n = 0;
  int min_n = std::numeric_limits<int>::max();
  for (int n : class_counts) {
    max_n = std::max(max_n, n);
    min_n = std::min(min_n, n);
  }
  if (min_n <= 0) return 0.0;
  return static_cast<double>(max_n) / static_cast<double>(min_n);
}

LabeledDataset LabeledDataset::make(Matrix features, std::vector<int> labels,
                                    int num_classes, std::string name) {
  if (features.rows != labels.size())
    throw std::invalid_argument("LabeledDataset: features/labels row mismatch");
  if (num_classes < 1) throw std::invalid_argument("LabeledDataset: need >= 1 class");
  LabeledDataset d;
  d.features = std::move(features);
  d.labels = std::move(labels);
  d.class_counts.assign(static_cast<std::size_t>(num_classes), 0);
  for (int y : d.labels) {
    if (y < 0 || y >= num_classes)
      throw std::invalid_argument("LabeledDataset: label out of range");
    ++d.class_counts[static_cast<std::size_t>(y)];
  }
  d.name = std::move(name);
  return d;
}

ClassIndex::ClassIndex(const LabeledDataset& data) {
  rows.resize(static_cast<std::size_t>(data.num_classes()));
  for (std::size_t r = 0; r < data.size(); ++r)
    rows[static_cast<std::size_t>(data.labels[r])].push_back(r);
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

[[noreturn]] void parse_fail(const std::string& path, std::size_t line_no,
                             const std::string& msg) {
  throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + msg);
}

}  // namespace

LabeledDataset load_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open dataset file: " + path);

  std::string line;
  if (!std::getline(is, line)) parse_fail(path, 1, "missing header row");
  const std::vector<std::string> header = split_fields(line);
  if (header.size() < 2 || header.back() != "label")
    parse_fail(path, 1, "header must be f0,...,f{d-1},label");
  const std::size_t dim = header.size() - 1;

  std::vector<double> values;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != dim + 1)
      parse_fail(path, line_no, "expected " + std::to_string(dim + 1) + " fields, got " +
                                    std::to_string(fields.size()));
    for (std::size_t i = 0; i < dim; ++i) {
      char* end = nullptr;
      const double v = std::strtod(fields[i].c_str(), &end);
      if (end == fields[i].c_str() || *end != '\0')
        parse_fail(path, line_no, "invalid feature value '" + fields[i] + "'");
      values.push_back(v);
    }
    char* end = nullptr;
    const long y = std::strtol(fields[dim].c_str(), &end, 10);
    if (end == fields[dim].c_str() || *end != '\0')
      parse_fail(path, line_no, "invalid label '" + fields[dim] + "'");
    if (y < 0) parse_fail(path, line_no, "negative label");
    labels.push_back(static_cast<int>(y));
  }

  Matrix features(labels.size(), dim);
  features.data = std::move(values);
  int num_classes = 0;
  for (int y : labels) num_classes = std::max(num_classes, y + 1);
  if (num_classes == 0) num_classes = 1;

  std::string name = path;
  if (const auto slash = name.find_last_of('/'); slash != std::string::npos)
    name = name.substr(slash + 1);
  if (name.size() > 4 && name.ends_with(".csv")) name.resize(name.size() - 4);
  return LabeledDataset::make(std::move(features), std::move(labels), num_classes,
                              std::move(name));
}

void save_csv(const LabeledDataset& data, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open dataset file for writing: " + path);
  for (std::size_t i = 0; i < data.dim(); ++i) os << 'f' << i << ',';
  os << "label\n";
  char buf[64];
  for (std::size_t r = 0; r < data.size(); ++r) {
    for (std::size_t i = 0; i < data.dim(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", data.features(r, i));
      os << buf << ',';
    }
    os << data.labels[r] << '\n';
  }
  if (!os) throw std::runtime_error("failed writing dataset file: " + path);
}

void save_metadata(const LabeledDataset& data, const std::string& path) {
  nlohmann::json meta;
  meta["name"] = data.name;
  meta["num_classes"] = data.num_classes();
  meta["class_counts"] = data.class_counts;
  meta["num_samples"] = data.size();
  meta["dim"] = data.dim();
  const double rho = data.imbalance_factor();
  if (rho > 0.0)
    meta["rho"] = rho;
  else
    meta["rho"] = nullptr;
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open metadata file for writing: " + path);
  os << meta.dump(2) << '\n';
}

}  // namespace cpmix
