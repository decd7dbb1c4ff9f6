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

#ifndef VFLR_PIPELINE_DATA_HPP_
#define VFLR_PIPELINE_DATA_HPP_

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vflr/learn/dataset.hpp"
#include "vflr/linkage/clk.hpp"

namespace vflr::pipeline {

using linkage::Record;

// Credit-scoring style table: entity_id, personal identifiers, numeric
// features x01.. and a 0/1 `default` label.
struct CreditOptions {
  std::size_t rows = 5000;
  std::size_t features = 10;
  double positive_rate = 0.07;
  std::uint64_t seed = 1;
};

learn::CsvTable synthetic_credit(const CreditOptions& opt);

// Identifier columns written by synthetic_credit.
const std::vector<std::string>& credit_pi_columns();

// Each field of each record independently: with missing_rate it is emptied,
// otherwise with typo_rate one character is substituted, transposed with its
// neighbour or deleted. Only `fields` are touched (empty = every field).
std::vector<Record> corrupt_pi(std::span<const Record> records,
                               double typo_rate, double missing_rate,
                               std::uint64_t seed,
                               const std::vector<std::string>& fields = {});

struct SplitConfig {
  std::string id_column = "entity_id";
  std::string label = "default";
  std::string positive_label;  // empty = numeric, > 0 is positive
  std::vector<std::string> pi_columns;
  std::vector<std::string> features_a;
  std::vector<std::string> features_b;
  double overlap = 1.0;
  std::uint64_t seed = 0;

  // Every column other than the id, the label and the identifiers must be
  // assigned to exactly one provider. Throws ConfigError.
  void validate(const learn::CsvTable& table) const;
};

// Assigns non-identifier feature columns in header order, the first half
// (rounded up) to A.
void auto_feature_split(const learn::CsvTable& table, SplitConfig& cfg);

struct ProviderView {
  std::vector<Record> pi;
  Eigen::MatrixXd X;
  Eigen::VectorXd y;  // A only
};

struct VerticalSplit {
  ProviderView a;
  ProviderView b;
  // Ground truth, held outside both views.
  std::vector<std::string> a_ids;
  std::vector<std::string> b_ids;
  std::size_t common = 0;
};

// Both views cover `rows` of the table in independent random orders.
// floor(overlap * n) rows keep their entity in B; every other B row gets a
// fresh identity whose fields are drawn from random rows of the table.
VerticalSplit vertical_split(const learn::CsvTable& table,
                             std::span<const std::size_t> rows,
                             const SplitConfig& cfg);

}  // namespace vflr::pipeline

#endif  // VFLR_PIPELINE_DATA_HPP_
