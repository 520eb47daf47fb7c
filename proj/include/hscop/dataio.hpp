#pragma once

#include <iosfwd>
#include <string>

#include "hscop/model.hpp"

namespace hscop {

struct Dataset {
  std::vector<std::vector<double>> X;  // N rows, p features
  std::vector<int> y;                  // class ids in [0, num_classes)
  int num_classes = 0;

  std::size_t size() const { return X.size(); }
  std::size_t features() const { return X.empty() ? 0 : X.front().size(); }
  std::vector<int> class_counts() const;
  void validate() const;
  Dataset subset(const std::vector<int>& rows) const;
};

// CSV with an optional header row; the label column is named (requires a
// header) or given as a 0-based index.  Labels may be arbitrary strings and
// are mapped to dense ids by first appearance in sorted order.
Dataset load_csv(std::istream& in, const std::string& label_col);
Dataset load_csv_file(const std::string& path, const std::string& label_col);

// Train-set affine feature scaling; zero-variance features pass through.
struct Standardizer {
  std::vector<double> mean, scale;

  static Standardizer fit(const Dataset& train);
  void apply(Dataset& d) const;
};

// Per-class round-robin assignment after a seeded shuffle: fold sizes and
// class ratios differ by at most one sample.
std::vector<std::vector<int>> stratified_folds(const std::vector<int>& y, int k,
                                               std::uint64_t seed);

}  // namespace hscop
