/*
 * Copyright 2026 The vflr Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef VFLR_LEARN_DATASET_HPP_
#define VFLR_LEARN_DATASET_HPP_

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace vflr::learn {

// Rows are examples. Labels are -1 or +1.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::string> feature_names;

  std::size_t rows() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(X.cols()); }

  // Throws DimensionError / RangeError.
  void validate() const;
  Dataset subset(std::span<const std::size_t> rows) const;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Throws ConfigError if absent.
  std::size_t column(const std::string& name) const;
};

// RFC 4180 style: quoted fields may hold commas, quotes ("") and newlines.
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::string& path);
std::string format_csv(const CsvTable& table);
void write_csv(const std::string& path, const CsvTable& table);

// How a label cell becomes -1/+1. With `positive` set, equality means +1;
// otherwise the cell is parsed as a number and > 0 means +1.
struct LabelRule {
  std::string positive;
  int to_sign(const std::string& cell) const;
};

Dataset dataset_from_table(const CsvTable& table, const std::string& label,
                           const std::vector<std::string>& features,
                           const LabelRule& rule = {});

// Per-column affine map fitted on a subset of rows (population variance).
class Standardizer {
 public:
  Standardizer() = default;
  static Standardizer fit(const Eigen::MatrixXd& X,
                          std::span<const std::size_t> rows);
  static Standardizer fit(const Eigen::MatrixXd& X);

  Eigen::MatrixXd transform(const Eigen::MatrixXd& X) const;
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& scale() const { return scale_; }

 private:
  Eigen::VectorXd mean_;
  Eigen::VectorXd scale_;
};

// Majority-class subsampling: indices (ascending) with equal class counts.
std::vector<std::size_t> balance_by_subsampling(const Eigen::VectorXd& y,
                                                std::uint64_t seed);
// Weights making both classes carry equal total weight, mean weight 1.
Eigen::VectorXd balance_weights(const Eigen::VectorXd& y);

// h distinct row indices out of n, ascending. Shared by the plaintext
// learner and the providers so both pick the same hold-out.
std::vector<std::size_t> sample_holdout(std::size_t n, std::size_t h,
                                        std::uint64_t seed);
// [0, n) minus `holdout` (which must be sorted), ascending.
std::vector<std::size_t> complement(std::size_t n,
                                    std::span<const std::size_t> holdout);

}  // namespace vflr::learn

#endif  // VFLR_LEARN_DATASET_HPP_
