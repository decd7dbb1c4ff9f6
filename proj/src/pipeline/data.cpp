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

#include "vflr/pipeline/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>

#include "vflr/common/error.hpp"

namespace vflr::pipeline {
namespace {

const char* const kGiven[] = {
    "james",   "mary",     "john",    "patricia", "robert",  "jennifer",
    "michael", "linda",    "william", "elizabeth", "david",  "barbara",
    "richard", "susan",    "joseph",  "jessica",  "thomas",  "sarah",
    "charles", "karen",    "chris",   "nancy",    "daniel",  "lisa",
    "matthew", "betty",    "anthony", "margaret", "mark",    "sandra",
    "donald",  "ashley",   "steven",  "kimberly", "paul",    "emily",
    "andrew",  "donna",    "joshua",  "michelle", "kenneth", "dorothy",
    "kevin",   "carol",    "brian",   "amanda",   "george",  "melissa",
    "edward",  "deborah",  "ronald",  "stephanie", "timothy", "rebecca",
    "jason",   "sharon",   "jeffrey", "laura",    "ryan",    "cynthia",
    "jacob",   "kathleen", "gary",    "amy",      "nicholas", "shirley",
    "eric",    "angela",   "jonathan", "helen",   "stephen", "anna",
    "larry",   "brenda",   "justin",  "pamela",   "scott",   "nicole",
    "brandon", "emma",     "benjamin", "samantha", "samuel", "katherine",
    "gregory", "christine", "frank",  "debra",    "alexander", "rachel",
    "raymond", "catherine", "patrick", "carolyn", "jack",    "janet",
    "dennis",  "ruth",     "jerry",   "maria"};

const char* const kSurname[] = {
    "smith",    "johnson",  "williams", "brown",    "jones",     "garcia",
    "miller",   "davis",    "rodriguez", "martinez", "hernandez", "lopez",
    "gonzalez", "wilson",   "anderson", "thomas",   "taylor",    "moore",
    "jackson",  "martin",   "lee",      "perez",    "thompson",  "white",
    "harris",   "sanchez",  "clark",    "ramirez",  "lewis",     "robinson",
    "walker",   "young",    "allen",    "king",     "wright",    "scott",
    "torres",   "nguyen",   "hill",     "flores",   "green",     "adams",
    "nelson",   "baker",    "hall",     "rivera",   "campbell",  "mitchell",
    "carter",   "roberts",  "gomez",    "phillips", "evans",     "turner",
    "diaz",     "parker",   "cruz",     "edwards",  "collins",   "reyes",
    "stewart",  "morris",   "morales",  "murphy",   "cook",      "rogers",
    "gutierrez", "ortiz",   "morgan",   "cooper",   "peterson",  "bailey",
    "reed",     "kelly",    "howard",   "ramos",    "kim",       "cox",
    "ward",     "richardson", "watson", "brooks",   "chavez",    "wood",
    "james",    "bennett",  "gray",     "mendoza",  "ruiz",      "hughes",
    "price",    "alvarez",  "castillo", "sanders",  "patel",     "myers",
    "long",     "ross",     "foster",   "jimenez",  "powell",    "jenkins",
    "perry",    "russell",  "sullivan", "bell",     "coleman",   "butler",
    "henderson", "barnes",  "fisher",   "vasquez",  "simmons",   "romero"};

const char* const kStreet[] = {
    "main st",      "high st",     "church rd",   "station rd", "park ave",
    "victoria st",  "george st",   "king st",     "queen st",   "albert rd",
    "elm st",       "oak ave",     "pine rd",     "maple st",   "cedar ln",
    "river rd",     "hill st",     "lake dr",     "forest ave", "bridge st",
    "mill ln",      "north rd",    "south st",    "west ave",   "east rd",
    "park ln",      "garden st",   "school rd",   "green ln",   "market st",
    "spring st",    "water st",    "union st",    "chapel st",  "grove rd",
    "ocean dr",     "sunset blvd", "valley rd",   "ridge rd",   "meadow ln",
    "harbour st",   "beach rd",    "railway pde", "canal st",   "castle st",
    "abbey rd",     "wattle st",   "banksia ave", "acacia cres", "jacaranda st"};

const char* const kSuburb[] = {
    "ashfield",   "burwood",   "carlton",   "dandenong", "epping",
    "fairfield",  "glenroy",   "hawthorn",  "ivanhoe",   "kew",
    "lilyfield",  "mosman",    "newtown",   "oakleigh",  "parkville",
    "queenscliff", "richmond", "strathfield", "toorak",  "ultimo",
    "vaucluse",   "waverley",  "yarraville", "zetland",  "balmain",
    "coogee",     "drummoyne", "elsternwick", "frankston", "glebe",
    "hurstville", "kensington", "leichhardt", "malvern", "northcote",
    "paddington", "randwick",  "st kilda",  "thornbury", "windsor"};

template <typename T, std::size_t N>
const T& pick(const T (&arr)[N], std::mt19937_64& gen) {
  return arr[gen() % N];
}

std::string two_digits(unsigned v) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02u", v);
  return buf;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

char replacement(char c, std::mt19937_64& gen) {
  if (is_digit(c)) {
    return static_cast<char>('0' + (c - '0' + 1 + gen() % 9) % 10);
  }
  const int from = c >= 'a' && c <= 'z' ? c - 'a' : -1;
  int r = static_cast<int>(gen() % 25);
  if (from >= 0 && r >= from) ++r;
  return static_cast<char>('a' + r);
}

void typo(std::string& s, std::mt19937_64& gen) {
  if (s.empty()) return;
  const auto op = gen() % 3;
  if (op == 1) {
    std::vector<std::size_t> at;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      if (s[i] != s[i + 1]) at.push_back(i);
    }
    if (!at.empty()) {
      const std::size_t i = at[gen() % at.size()];
      std::swap(s[i], s[i + 1]);
      return;
    }
    // nothing to transpose: substitute instead
  }
  const std::size_t i = gen() % s.size();
  if (op == 2) {
    s.erase(i, 1);
  } else {
    s[i] = replacement(s[i], gen);
  }
}

std::set<std::string> column_set(const std::vector<std::string>& v,
                                 const char* what) {
  std::set<std::string> out;
  for (const auto& c : v) {
    if (!out.insert(c).second) {
      throw ConfigError(std::string(what) + " lists column '" + c + "' twice");
    }
  }
  return out;
}

}  // namespace

const std::vector<std::string>& credit_pi_columns() {
  static const std::vector<std::string> cols = {"given_name", "surname", "dob",
                                                "address", "postcode"};
  return cols;
}

learn::CsvTable synthetic_credit(const CreditOptions& opt) {
  if (opt.rows == 0 || opt.features == 0) {
    throw ConfigError("synthetic data needs rows and features");
  }
  if (!(opt.positive_rate > 0.0 && opt.positive_rate < 1.0)) {
    throw ConfigError("positive rate must lie in (0, 1)");
  }
  std::mt19937_64 gen(opt.seed);
  std::normal_distribution<double> normal;
  const auto n = static_cast<Eigen::Index>(opt.rows);
  const auto d = static_cast<Eigen::Index>(opt.features);

  // Correlated latent features through a random lower-triangular mix.
  Eigen::MatrixXd mix = Eigen::MatrixXd::Identity(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) mix(i, j) = 0.3 * normal(gen);
  }
  Eigen::VectorXd w(d), scale(d), shift(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    w[j] = (j % 2 == 0 ? 1.0 : -1.0) * 1.6 / std::sqrt(1.0 + j);
    scale[j] = std::pow(10.0, static_cast<double>(gen() % 4));
    shift[j] = scale[j] * static_cast<double>(gen() % 5);
  }
  Eigen::MatrixXd Z(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) Z(i, j) = normal(gen);
  }
  Z = Z * mix.transpose();

  // Logistic noise on a linear score, thresholded at the positive rate.
  std::uniform_real_distribution<double> unit(1e-12, 1.0 - 1e-12);
  Eigen::VectorXd s = Z * w;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = unit(gen);
    s[i] += std::log(u / (1.0 - u));
  }
  std::vector<double> sorted(s.data(), s.data() + n);
  const auto cut = static_cast<std::size_t>(
      std::floor((1.0 - opt.positive_rate) * static_cast<double>(n)));
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(cut),
                   sorted.end());
  const double threshold = sorted[std::min(cut, sorted.size() - 1)];

  learn::CsvTable t;
  t.header = {"entity_id"};
  for (const auto& c : credit_pi_columns()) t.header.push_back(c);
  for (Eigen::Index j = 0; j < d; ++j) {
    t.header.push_back("x" + two_digits(static_cast<unsigned>(j + 1)));
  }
  t.header.push_back("default");

  std::set<std::string> seen;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<std::string> row;
    char id[24];
    std::snprintf(id, sizeof id, "E%07ld", static_cast<long>(i));
    row.push_back(id);
    // Redraw the rare exact duplicate identity.
    for (;;) {
      const std::string given = pick(kGiven, gen);
      const std::string sur = pick(kSurname, gen);
      const unsigned year = 1940 + static_cast<unsigned>(gen() % 62);
      const std::string dob = std::to_string(year) + "-" +
                              two_digits(1 + gen() % 12) + "-" +
                              two_digits(1 + gen() % 28);
      const std::size_t sub = gen() % std::size(kSuburb);
      const std::string addr = std::to_string(1 + gen() % 300) + " " +
                               pick(kStreet, gen) + " " + kSuburb[sub];
      const std::string post = std::to_string(2000 + 37 * sub);
      if (!seen.insert(given + "|" + sur + "|" + dob).second) continue;
      row.insert(row.end(), {given, sur, dob, addr, post});
      break;
    }
    for (Eigen::Index j = 0; j < d; ++j) {
      row.push_back(format_number(shift[j] + scale[j] * Z(i, j)));
    }
    row.push_back(s[i] > threshold ? "1" : "0");
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::vector<Record> corrupt_pi(std::span<const Record> records,
                               double typo_rate, double missing_rate,
                               std::uint64_t seed,
                               const std::vector<std::string>& fields) {
  if (!(typo_rate >= 0.0 && typo_rate <= 1.0) ||
      !(missing_rate >= 0.0 && missing_rate <= 1.0)) {
    throw ConfigError("corruption rates must lie in [0, 1]");
  }
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Record> out(records.begin(), records.end());
  for (auto& rec : out) {
    for (auto& [name, value] : rec) {
      if (!fields.empty() &&
          std::find(fields.begin(), fields.end(), name) == fields.end()) {
        continue;
      }
      // Both draws happen for every field so the stream does not depend on
      // the outcome.
      const double m = unit(gen);
      const double t = unit(gen);
      if (m < missing_rate) {
        value.clear();
      } else if (t < typo_rate) {
        typo(value, gen);
      }
    }
  }
  return out;
}

void SplitConfig::validate(const learn::CsvTable& table) const {
  if (!(overlap >= 0.0 && overlap <= 1.0)) {
    throw ConfigError("overlap must lie in [0, 1]");
  }
  const auto pi = column_set(pi_columns, "identifier list");
  const auto fa = column_set(features_a, "provider A features");
  const auto fb = column_set(features_b, "provider B features");
  if (fa.empty() || fb.empty()) {
    throw ConfigError("both providers need at least one feature column");
  }
  std::set<std::string> reserved = pi;
  reserved.insert(id_column);
  reserved.insert(label);
  table.column(id_column);
  table.column(label);
  for (const auto& c : pi) table.column(c);
  for (const auto& c : table.header) {
    if (reserved.count(c) != 0) {
      if (fa.count(c) != 0 || fb.count(c) != 0) {
        throw ConfigError("column '" + c + "' cannot be a feature");
      }
      continue;
    }
    const int owners = static_cast<int>(fa.count(c) + fb.count(c));
    if (owners != 1) {
      throw ConfigError("column '" + c + "' must belong to exactly one provider");
    }
  }
  for (const auto& c : fa) table.column(c);
  for (const auto& c : fb) table.column(c);
}

void auto_feature_split(const learn::CsvTable& table, SplitConfig& cfg) {
  std::set<std::string> reserved(cfg.pi_columns.begin(), cfg.pi_columns.end());
  reserved.insert(cfg.id_column);
  reserved.insert(cfg.label);
  std::vector<std::string> feats;
  for (const auto& c : table.header) {
    if (reserved.count(c) == 0) feats.push_back(c);
  }
  const std::size_t half = (feats.size() + 1) / 2;
  cfg.features_a.assign(feats.begin(), feats.begin() + static_cast<long>(half));
  cfg.features_b.assign(feats.begin() + static_cast<long>(half), feats.end());
}

VerticalSplit vertical_split(const learn::CsvTable& table,
                             std::span<const std::size_t> rows,
                             const SplitConfig& cfg) {
  cfg.validate(table);
  const std::size_t n = rows.size();
  if (n == 0) throw RangeError("vertical split of an empty row set");
  for (auto r : rows) {
    if (r >= table.rows.size()) throw RangeError("row index out of range");
  }
  const auto common = static_cast<std::size_t>(
      std::floor(cfg.overlap * static_cast<double>(n) + 1e-9));
  const std::size_t id_col = table.column(cfg.id_column);
  std::vector<std::size_t> pi_cols;
  for (const auto& c : cfg.pi_columns) pi_cols.push_back(table.column(c));

  std::mt19937_64 gen(cfg.seed);
  std::vector<std::size_t> order_a(rows.begin(), rows.end());
  std::vector<std::size_t> order_b(rows.begin(), rows.end());
  std::shuffle(order_a.begin(), order_a.end(), gen);
  std::shuffle(order_b.begin(), order_b.end(), gen);

  // Which rows keep their entity in B: the first `common` of another draw.
  std::vector<std::size_t> pick_common(rows.begin(), rows.end());
  std::shuffle(pick_common.begin(), pick_common.end(), gen);
  std::set<std::size_t> keep(pick_common.begin(),
                             pick_common.begin() + static_cast<long>(common));

  auto record_of = [&](std::size_t r) {
    Record rec;
    for (std::size_t k = 0; k < pi_cols.size(); ++k) {
      rec[cfg.pi_columns[k]] = table.rows[r][pi_cols[k]];
    }
    return rec;
  };

  VerticalSplit out;
  out.common = common;
  const learn::LabelRule rule{cfg.positive_label};
  const auto A = learn::dataset_from_table(table, cfg.label, cfg.features_a, rule);
  const auto B = learn::dataset_from_table(table, cfg.label, cfg.features_b, rule);

  auto fill = [&](ProviderView& v, const learn::Dataset& ds,
                  const std::vector<std::size_t>& order, bool labels) {
    v.X.resize(static_cast<Eigen::Index>(n), ds.X.cols());
    if (labels) v.y.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(order[i]);
      v.X.row(static_cast<Eigen::Index>(i)) = ds.X.row(r);
      if (labels) v.y[static_cast<Eigen::Index>(i)] = ds.y[r];
    }
  };
  fill(out.a, A, order_a, true);
  fill(out.b, B, order_b, false);

  for (auto r : order_a) {
    out.a.pi.push_back(record_of(r));
    out.a_ids.push_back(table.rows[r][id_col]);
  }
  std::uniform_int_distribution<std::size_t> any(0, table.rows.size() - 1);
  for (auto r : order_b) {
    if (keep.count(r) != 0) {
      out.b.pi.push_back(record_of(r));
      out.b_ids.push_back(table.rows[r][id_col]);
      continue;
    }
    Record rec;
    for (std::size_t k = 0; k < pi_cols.size(); ++k) {
      rec[cfg.pi_columns[k]] = table.rows[any(gen)][pi_cols[k]];
    }
    out.b.pi.push_back(std::move(rec));
    out.b_ids.push_back("~" + table.rows[r][id_col]);
  }
  return out;
}

}  // namespace vflr::pipeline
