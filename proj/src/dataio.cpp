#include "hscop/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace hscop {

std::vector<int> Dataset::class_counts() const {
  std::vector<int> counts(static_cast<std::size_t>(num_classes), 0);
  for (int label : y) ++counts[static_cast<std::size_t>(label)];
  return counts;
}

void Dataset::validate() const {
  if (X.size() != y.size()) throw std::invalid_argument("Dataset: row/label count mismatch");
  if (X.empty()) throw std::invalid_argument("Dataset: empty");
  std::size_t p = X.front().size();
  for (const auto& row : X)
    if (row.size() != p) throw std::invalid_argument("Dataset: ragged rows");
  for (int label : y)
    if (label < 0 || label >= num_classes)
      throw std::invalid_argument("Dataset: label outside the class range");
}

Dataset Dataset::subset(const std::vector<int>& rows) const {
  Dataset out;
  out.num_classes = num_classes;
  out.X.reserve(rows.size());
  out.y.reserve(rows.size());
  for (int r : rows) {
    out.X.push_back(X[static_cast<std::size_t>(r)]);
    out.y.push_back(y[static_cast<std::size_t>(r)]);
  }
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  for (auto& f : fields) {
    std::size_t a = f.find_first_not_of(" \t");
    std::size_t b = f.find_last_not_of(" \t");
    f = a == std::string::npos ? "" : f.substr(a, b - a + 1);
  }
  return fields;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stod(s, &pos);
  } catch (...) {
    return false;
  }
  return pos == s.size();
}

}  // namespace

Dataset load_csv(std::istream& in, const std::string& label_col) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(split_csv_line(line));
  }
  if (rows.empty()) throw std::invalid_argument("csv: no rows");

  // header detection: any non-numeric field in the first row
  bool header = false;
  for (const auto& f : rows.front()) {
    double tmp;
    if (!parse_double(f, tmp)) {
      header = true;
      break;
    }
  }

  std::size_t cols = rows.front().size();
  int label_idx = -1;
  if (header) {
    for (std::size_t c = 0; c < cols; ++c)
      if (rows.front()[c] == label_col) label_idx = static_cast<int>(c);
  }
  if (label_idx < 0) {
    double idx;
    if (parse_double(label_col, idx) && idx >= 0 && idx < static_cast<double>(cols))
      label_idx = static_cast<int>(idx);
  }
  if (label_idx < 0)
    throw std::invalid_argument("csv: label column '" + label_col + "' not found");

  std::size_t first_data = header ? 1 : 0;
  std::map<std::string, int> label_ids;
  for (std::size_t r = first_data; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw std::invalid_argument("csv: ragged row");
    label_ids.emplace(rows[r][static_cast<std::size_t>(label_idx)], 0);
  }
  int next = 0;
  for (auto& [key, id] : label_ids) id = next++;  // sorted order

  Dataset d;
  d.num_classes = next;
  for (std::size_t r = first_data; r < rows.size(); ++r) {
    std::vector<double> x;
    x.reserve(cols - 1);
    for (std::size_t c = 0; c < cols; ++c) {
      if (static_cast<int>(c) == label_idx) continue;
      double v;
      if (!parse_double(rows[r][c], v))
        throw std::invalid_argument("csv: non-numeric feature at row " + std::to_string(r + 1));
      x.push_back(v);
    }
    d.X.push_back(std::move(x));
    d.y.push_back(label_ids[rows[r][static_cast<std::size_t>(label_idx)]]);
  }
  d.validate();
  return d;
}

Dataset load_csv_file(const std::string& path, const std::string& label_col) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("csv: cannot open " + path);
  return load_csv(in, label_col);
}

Standardizer Standardizer::fit(const Dataset& train) {
  std::size_t p = train.features();
  Standardizer s;
  s.mean.assign(p, 0.0);
  s.scale.assign(p, 1.0);
  double n = static_cast<double>(train.size());
  for (const auto& row : train.X)
    for (std::size_t f = 0; f < p; ++f) s.mean[f] += row[f];
  for (auto& m : s.mean) m /= n;
  std::vector<double> var(p, 0.0);
  for (const auto& row : train.X)
    for (std::size_t f = 0; f < p; ++f) var[f] += (row[f] - s.mean[f]) * (row[f] - s.mean[f]);
  for (std::size_t f = 0; f < p; ++f) {
    double sd = std::sqrt(var[f] / n);
    if (sd > 1e-12) s.scale[f] = sd;
  }
  return s;
}

void Standardizer::apply(Dataset& d) const {
  for (auto& row : d.X)
    for (std::size_t f = 0; f < row.size(); ++f) row[f] = (row[f] - mean[f]) / scale[f];
}

std::vector<std::vector<int>> stratified_folds(const std::vector<int>& y, int k,
                                               std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("stratified_folds: need k >= 2");
  int classes = 0;
  for (int label : y) classes = std::max(classes, label + 1);
  std::mt19937_64 rng(seed);
  std::vector<std::vector<int>> folds(static_cast<std::size_t>(k));
  int dealt = 0;
  for (int c = 0; c < classes; ++c) {
    std::vector<int> members;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (y[i] == c) members.push_back(static_cast<int>(i));
    std::shuffle(members.begin(), members.end(), rng);
    for (int m : members) folds[static_cast<std::size_t>(dealt++ % k)].push_back(m);
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

}  // namespace hscop
