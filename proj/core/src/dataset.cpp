#include "smcsr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace smcsr {

namespace {
// All-rows index list, materialized lazily per call (datasets are small).
std::vector<int> all_indices(int n) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  return idx;
}
}  // namespace

const std::vector<int>& Dataset::indices(Split s) const {
  switch (s) {
    case Split::Train: return train;
    case Split::Validation: return validation;
    case Split::Test: return test;
    default: throw data_error("indices() not defined for Split::All");
  }
}

Eigen::MatrixXd Dataset::x_rows(Split s) const {
  if (s == Split::All) return X;
  const auto& idx = indices(s);
  Eigen::MatrixXd out(idx.size(), X.cols());
  for (size_t i = 0; i < idx.size(); ++i) out.row(i) = X.row(idx[i]);
  return out;
}

Eigen::VectorXd Dataset::y_rows(Split s) const {
  if (s == Split::All) return y;
  const auto& idx = indices(s);
  Eigen::VectorXd out(idx.size());
  for (size_t i = 0; i < idx.size(); ++i) out[i] = y[idx[i]];
  return out;
}

double median_abs(const Eigen::VectorXd& v) {
  if (v.size() == 0) return 0.0;
  std::vector<double> a(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) a[i] = std::abs(v[i]);
  std::sort(a.begin(), a.end());
  size_t n = a.size();
  return (n % 2 == 1) ? a[n / 2] : 0.5 * (a[n / 2 - 1] + a[n / 2]);
}

Dataset make_dataset(Eigen::MatrixXd X, Eigen::VectorXd y) {
  if (X.rows() != y.size() || X.rows() < 1) throw data_error("X and y must have matching, nonzero row counts");
  if (!X.allFinite() || !y.allFinite()) throw data_error("dataset contains non-finite entries");
  Dataset d;
  d.X = std::move(X);
  d.y = std::move(y);
  d.magnitude = median_abs(d.y);
  d.train = all_indices(d.n_rows());
  return d;
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open dataset file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw data_error("empty dataset file: " + path);
  // header must read x0,...,x{N-1},y
  if (!line.empty() && line.back() == '\r') line.pop_back();
  int n_cols = 1 + static_cast<int>(std::count(line.begin(), line.end(), ','));
  if (n_cols < 2) throw data_error("dataset header must contain x columns and y: " + path);
  {
    std::string expected;
    for (int j = 0; j < n_cols - 1; ++j) expected += "x" + std::to_string(j) + ",";
    expected += "y";
    if (line != expected)
      throw data_error("dataset header must be '" + expected + "' in " + path);
  }
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw data_error("bad value '" + cell + "' on line " + std::to_string(lineno) + " of " + path);
      }
    }
    if (static_cast<int>(row.size()) != n_cols)
      throw data_error("column count mismatch on line " + std::to_string(lineno) + " of " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw data_error("dataset has no rows: " + path);
  Eigen::MatrixXd X(rows.size(), n_cols - 1);
  Eigen::VectorXd y(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    for (int j = 0; j < n_cols - 1; ++j) X(i, j) = rows[i][j];
    y[i] = rows[i][n_cols - 1];
  }
  return make_dataset(std::move(X), std::move(y));
}

void save_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write dataset file: " + path);
  out.precision(17);
  for (int j = 0; j < data.n_features(); ++j) out << 'x' << j << ',';
  out << "y\n";
  for (int i = 0; i < data.n_rows(); ++i) {
    for (int j = 0; j < data.n_features(); ++j) out << data.X(i, j) << ',';
    out << data.y[i] << '\n';
  }
}

namespace {
std::vector<int> read_index_array(const nlohmann::json& j, const char* key, int n_rows) {
  std::vector<int> out;
  if (!j.contains(key)) return out;
  for (const auto& v : j.at(key)) {
    int i = v.get<int>();
    if (i < 0 || i >= n_rows) throw data_error(std::string("split index out of range in '") + key + "'");
    out.push_back(i);
  }
  return out;
}
}  // namespace

void load_split_manifest(Dataset& data, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open split manifest: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& ex) {
    throw data_error("bad split manifest " + path + ": " + ex.what());
  }
  auto train = read_index_array(j, "train", data.n_rows());
  auto validation = read_index_array(j, "validation", data.n_rows());
  auto test = read_index_array(j, "test", data.n_rows());
  std::vector<char> seen(data.n_rows(), 0);
  for (const auto* part : {&train, &validation, &test})
    for (int i : *part) {
      if (seen[i]) throw data_error("split manifest assigns row " + std::to_string(i) + " twice");
      seen[i] = 1;
    }
  if (train.empty()) throw data_error("split manifest has empty train set");
  data.train = std::move(train);
  data.validation = std::move(validation);
  data.test = std::move(test);
}

void save_split_manifest(const Dataset& data, const std::string& path) {
  nlohmann::json j;
  j["train"] = data.train;
  j["validation"] = data.validation;
  j["test"] = data.test;
  std::ofstream out(path);
  if (!out) throw data_error("cannot write split manifest: " + path);
  out << j.dump(2) << '\n';
}

std::uint64_t fingerprint(const Dataset& data) {
  // FNV-1a over the raw bytes of X, y and the split index lists.
  std::uint64_t h = 1469598103934665603ULL;
  auto mix_bytes = [&h](const void* p, size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  mix_bytes(data.X.data(), sizeof(double) * data.X.size());
  mix_bytes(data.y.data(), sizeof(double) * data.y.size());
  for (const auto* part : {&data.train, &data.validation, &data.test}) {
    size_t n = part->size();
    mix_bytes(&n, sizeof(n));
    if (n) mix_bytes(part->data(), sizeof(int) * n);
  }
  return h;
}

}  // namespace smcsr
