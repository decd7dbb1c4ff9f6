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

#include "vflr/learn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "vflr/common/error.hpp"

namespace vflr::learn {

void Dataset::validate() const {
  if (X.rows() == 0 || X.cols() == 0) {
    throw DimensionError("dataset must have at least one row and column");
  }
  if (y.size() != X.rows()) {
    throw DimensionError("label count does not match row count");
  }
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] != 1.0 && y[i] != -1.0) throw RangeError("labels must be -1 or +1");
  }
  if (!X.allFinite()) throw RangeError("features must be finite");
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
  out.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(rows[i]);
    if (r >= X.rows()) throw RangeError("subset row out of range");
    out.X.row(static_cast<Eigen::Index>(i)) = X.row(r);
    out.y[static_cast<Eigen::Index>(i)] = y[r];
  }
  out.feature_names = feature_names;
  return out;
}

std::size_t CsvTable::column(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ConfigError("CSV has no column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(record.size() == 1 && record[0].empty())) {
      records.push_back(std::move(record));
    }
    record.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started) throw IoError("CSV: stray quote inside field");
        quoted = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (quoted) throw IoError("CSV: unterminated quoted field");
  if (field_started || !field.empty() || !record.empty()) end_record();
  if (records.empty()) throw IoError("CSV: missing header");

  CsvTable table;
  table.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw IoError("CSV: row " + std::to_string(r) + " has " +
                    std::to_string(records[r].size()) + " fields, expected " +
                    std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

namespace {

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void append_row(std::string& out, const std::vector<std::string>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out.push_back(',');
    out += quote(row[i]);
  }
  out.push_back('\n');
}

}  // namespace

std::string format_csv(const CsvTable& table) {
  std::string out;
  append_row(out, table.header);
  for (const auto& row : table.rows) append_row(out, row);
  return out;
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << format_csv(table);
  if (!out) throw IoError("write failed for " + path);
}

int LabelRule::to_sign(const std::string& cell) const {
  if (!positive.empty()) return cell == positive ? 1 : -1;
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v > 0 ? 1 : -1;
  } catch (const std::exception&) {
    throw ConfigError("label '" + cell + "' is not numeric; set a positive label");
  }
}

Dataset dataset_from_table(const CsvTable& table, const std::string& label,
                           const std::vector<std::string>& features,
                           const LabelRule& rule) {
  const std::size_t li = table.column(label);
  std::vector<std::size_t> fi;
  for (const auto& f : features) fi.push_back(table.column(f));
  Dataset ds;
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  ds.X.resize(n, static_cast<Eigen::Index>(fi.size()));
  ds.y.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = table.rows[static_cast<std::size_t>(r)];
    ds.y[r] = rule.to_sign(row[li]);
    for (std::size_t j = 0; j < fi.size(); ++j) {
      const std::string& cell = row[fi[j]];
      try {
        std::size_t used = 0;
        ds.X(r, static_cast<Eigen::Index>(j)) = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw IoError("row " + std::to_string(r + 1) + ", column '" +
                      features[j] + "': not a number: '" + cell + "'");
      }
    }
  }
  ds.feature_names = features;
  return ds;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& X,
                               std::span<const std::size_t> rows) {
  if (rows.empty()) throw RangeError("standardizer needs at least one row");
  Standardizer s;
  const Eigen::Index d = X.cols();
  s.mean_ = Eigen::VectorXd::Zero(d);
  s.scale_ = Eigen::VectorXd::Ones(d);
  const double n = static_cast<double>(rows.size());
  for (auto r : rows) s.mean_ += X.row(static_cast<Eigen::Index>(r)).transpose();
  s.mean_ /= n;
  Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
  for (auto r : rows) {
    var += (X.row(static_cast<Eigen::Index>(r)).transpose() - s.mean_)
               .cwiseAbs2();
  }
  var /= n;
  for (Eigen::Index j = 0; j < d; ++j) {
    // Constant columns are centred but not scaled.
    s.scale_[j] = var[j] > 0 ? std::sqrt(var[j]) : 1.0;
  }
  return s;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& X) {
  std::vector<std::size_t> rows(static_cast<std::size_t>(X.rows()));
  std::iota(rows.begin(), rows.end(), 0);
  return fit(X, rows);
}

Eigen::MatrixXd Standardizer::transform(const Eigen::MatrixXd& X) const {
  if (X.cols() != mean_.size()) {
    throw DimensionError("standardizer fitted on a different column count");
  }
  return (X.rowwise() - mean_.transpose()).array().rowwise() /
         scale_.transpose().array();
}

std::vector<std::size_t> balance_by_subsampling(const Eigen::VectorXd& y,
                                                std::uint64_t seed) {
  std::vector<std::size_t> pos, neg;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    (y[i] > 0 ? pos : neg).push_back(static_cast<std::size_t>(i));
  }
  if (pos.empty() || neg.empty()) throw RangeError("balancing needs both classes");
  std::mt19937_64 gen(seed);
  auto& major = pos.size() > neg.size() ? pos : neg;
  const std::size_t keep = std::min(pos.size(), neg.size());
  std::shuffle(major.begin(), major.end(), gen);
  major.resize(keep);
  std::vector<std::size_t> out = pos;
  out.insert(out.end(), neg.begin(), neg.end());
  std::sort(out.begin(), out.end());
  return out;
}

Eigen::VectorXd balance_weights(const Eigen::VectorXd& y) {
  const double n = static_cast<double>(y.size());
  const double np = static_cast<double>((y.array() > 0).count());
  const double nn = n - np;
  if (np == 0 || nn == 0) throw RangeError("balancing needs both classes");
  Eigen::VectorXd w(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    w[i] = y[i] > 0 ? n / (2 * np) : n / (2 * nn);
  }
  return w;
}

std::vector<std::size_t> sample_holdout(std::size_t n, std::size_t h,
                                        std::uint64_t seed) {
  if (h > n) throw ConfigError("hold-out size exceeds row count");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 gen(seed);
  // Partial Fisher-Yates with explicit draws so the result does not depend
  // on the standard library's shuffle.
  for (std::size_t i = 0; i < h; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(gen() % (n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(h);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<std::size_t> complement(std::size_t n,
                                    std::span<const std::size_t> holdout) {
  std::vector<std::size_t> out;
  out.reserve(n - std::min(n, holdout.size()));
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (k < holdout.size() && holdout[k] == i) {
      ++k;
      continue;
    }
    out.push_back(i);
  }
  return out;
}

}  // namespace vflr::learn
