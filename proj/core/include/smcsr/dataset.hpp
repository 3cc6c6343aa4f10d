#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace smcsr {

struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Split { Train, Validation, Test, All };

// N_d observations of (x in R^{N_x}, y in R) with optional index splits.
// `magnitude` is median(|y|); synthesized datasets record it from the clean
// targets before noise injection.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  double magnitude = 0.0;
  std::vector<int> train;
  std::vector<int> validation;
  std::vector<int> test;

  int n_rows() const { return static_cast<int>(X.rows()); }
  int n_features() const { return static_cast<int>(X.cols()); }

  const std::vector<int>& indices(Split s) const;
  // Row-gathered views for a split; Split::All returns copies of X, y.
  Eigen::MatrixXd x_rows(Split s) const;
  Eigen::VectorXd y_rows(Split s) const;
};

double median_abs(const Eigen::VectorXd& v);

// Builds a dataset with all rows assigned to the training split and
// magnitude = median(|y|). Throws data_error on non-finite entries.
Dataset make_dataset(Eigen::MatrixXd X, Eigen::VectorXd y);

// CSV with header row x0,...,x{N_x-1},y.
Dataset load_csv(const std::string& path);
void save_csv(const Dataset& data, const std::string& path);

// Split manifest: JSON document with index arrays train/validation/test.
void load_split_manifest(Dataset& data, const std::string& path);
void save_split_manifest(const Dataset& data, const std::string& path);

// Content hash used for evidence cache keys.
std::uint64_t fingerprint(const Dataset& data);

}  // namespace smcsr
