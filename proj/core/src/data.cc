/*
 * Copyright 2026 The fermi Authors.
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

#include "fermi/data.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <string_view>

#include "fermi/errors.h"

namespace fermi {
namespace {

std::vector<std::string_view> SplitFields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string Where(std::int64_t line_no, std::string_view column) {
  return "line " + std::to_string(line_no) + ", column '" +
         std::string(column) + "'";
}

double ParseDouble(std::string_view cell, std::int64_t line_no,
                   std::string_view column) {
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw InputError("non-numeric feature cell '" + std::string(cell) +
                     "' at " + Where(line_no, column));
  }
  if (!std::isfinite(value)) {
    throw InputError("non-finite feature at " + Where(line_no, column));
  }
  return value;
}

int ParseIndex(std::string_view cell, std::int64_t line_no,
               std::string_view column) {
  int value = -1;
  const auto [ptr, ec] =
      std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() ||
      value < 0) {
    throw InputError("expected a nonnegative integer, got '" +
                     std::string(cell) + "' at " + Where(line_no, column));
  }
  return value;
}

std::string FormatDouble(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

}  // namespace

std::int64_t LabeledDataset::NumMasked() const {
  std::int64_t count = 0;
  for (const auto& s : sensitive) count += s.has_value() ? 0 : 1;
  return count;
}

void LabeledDataset::Validate() const {
  if (labels.empty()) throw InputError("dataset has no rows");
  if (features.rows() != size() ||
      sensitive.size() != labels.size()) {
    throw InputError("dataset columns have inconsistent lengths");
  }
  if (features.cols() < 1) throw InputError("dataset has no feature columns");
  if (m < 2 || k < 2) throw InputError("cardinalities m and k must be >= 2");
  if (!features.allFinite()) throw InputError("non-finite feature value");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= m) {
      throw InputError("label out of range at row " + std::to_string(i));
    }
    if (sensitive[i] && (*sensitive[i] < 0 || *sensitive[i] >= k)) {
      throw InputError("sensitive value out of range at row " +
                       std::to_string(i));
    }
  }
}

LabeledDataset LabeledDataset::Subset(
    std::span<const std::int64_t> rows) const {
  LabeledDataset out;
  out.m = m;
  out.k = k;
  out.feature_names = feature_names;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.labels.reserve(rows.size());
  out.sensitive.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::int64_t r = rows[i];
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(r);
    out.labels.push_back(labels[static_cast<std::size_t>(r)]);
    out.sensitive.push_back(sensitive[static_cast<std::size_t>(r)]);
  }
  return out;
}

void SynthConfig::Validate() const {
  if (n < 1) throw InputError("synthetic n must be >= 1");
  if (d < 1) throw InputError("synthetic d must be >= 1");
  if (!(bias_strength >= 0.0)) throw InputError("bias strength must be >= 0");
  if (!(group_balance > 0.0 && group_balance < 1.0)) {
    throw InputError("group balance must lie in (0, 1)");
  }
  if (!(noise_sd > 0.0)) throw InputError("noise sd must be positive");
}

SyntheticStream::SyntheticStream(const SynthConfig& config)
    : config_(config),
      rng_(config.seed),
      w0_(1.0 / std::sqrt(static_cast<double>(config.d))) {
  config_.Validate();
}

void SyntheticStream::Next(Eigen::VectorXd& x, int& label, int& sensitive) {
  const int d = config_.d;
  x.resize(d);
  sensitive = rng_.Uniform() < config_.group_balance ? 1 : 0;
  for (int c = 0; c < d; ++c) x(c) = rng_.Normal();
  x(d - 1) += config_.bias_strength * sensitive;
  double score = 0.0;
  for (int c = 0; c < d; ++c) score += w0_ * x(c);
  score += config_.bias_strength * sensitive + config_.noise_sd * rng_.Normal();
  label = score > 0.0 ? 1 : 0;
}

LabeledDataset SynthesizeBiased(const SynthConfig& config) {
  SyntheticStream stream(config);
  LabeledDataset out;
  out.features.resize(config.n, config.d);
  out.labels.resize(static_cast<std::size_t>(config.n));
  out.sensitive.resize(static_cast<std::size_t>(config.n));
  for (int c = 0; c < config.d; ++c) {
    out.feature_names.push_back("x" + std::to_string(c));
  }
  Eigen::VectorXd x;
  for (std::int64_t i = 0; i < config.n; ++i) {
    int label = 0;
    int s = 0;
    stream.Next(x, label, s);
    out.features.row(i) = x.transpose();
    out.labels[static_cast<std::size_t>(i)] = label;
    out.sensitive[static_cast<std::size_t>(i)] = s;
  }
  return out;
}

LabeledDataset MaskSensitive(const LabeledDataset& dataset, double fraction,
                             std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw InputError("mask fraction must lie in [0, 1]");
  }
  LabeledDataset out = dataset;
  const auto n = static_cast<std::uint64_t>(dataset.size());
  const auto count = static_cast<std::uint64_t>(
      std::floor(fraction * static_cast<double>(n)));
  std::vector<std::int64_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  SplitMix64 rng(seed);
  // Partial Fisher-Yates: the first `count` slots become a uniform sample.
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t j = i + rng.UniformIndex(n - i);
    std::swap(order[i], order[j]);
    out.sensitive[static_cast<std::size_t>(order[i])].reset();
  }
  return out;
}

std::pair<LabeledDataset, LabeledDataset> Split(const LabeledDataset& dataset,
                                                double test_fraction,
                                                std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw InputError("test fraction must lie in (0, 1)");
  }
  const std::int64_t n = dataset.size();
  const auto n_test = static_cast<std::int64_t>(
      std::llround(test_fraction * static_cast<double>(n)));
  if (n_test < 1 || n_test >= n) {
    throw InputError("split would leave the train or test side empty");
  }
  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  SplitMix64 rng(seed);
  Shuffle(std::span<std::int64_t>(order), rng);
  const std::span<const std::int64_t> all(order);
  return {dataset.Subset(all.subspan(static_cast<std::size_t>(n_test))),
          dataset.Subset(all.first(static_cast<std::size_t>(n_test)))};
}

LabeledDataset ReadCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.empty()) {
    throw InputError("empty CSV: missing header row");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string_view> header = SplitFields(line);
  int label_col = -1;
  int sensitive_col = -1;
  std::vector<int> feature_cols;
  LabeledDataset out;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string_view name = header[c];
    if (name.empty()) throw InputError("malformed header: empty column name");
    if (name == "label") {
      if (label_col >= 0) throw InputError("malformed header: duplicate 'label'");
      label_col = static_cast<int>(c);
    } else if (name == "sensitive") {
      if (sensitive_col >= 0) {
        throw InputError("malformed header: duplicate 'sensitive'");
      }
      sensitive_col = static_cast<int>(c);
    } else {
      feature_cols.push_back(static_cast<int>(c));
      out.feature_names.emplace_back(name);
    }
  }
  if (label_col < 0) throw InputError("malformed header: no 'label' column");
  if (sensitive_col < 0) {
    throw InputError("malformed header: no 'sensitive' column");
  }
  if (feature_cols.empty()) throw InputError("malformed header: no features");

  std::vector<double> values;
  std::int64_t line_no = 1;
  int max_label = 0;
  int max_sensitive = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string_view> cells = SplitFields(line);
    if (cells.size() != header.size()) {
      throw InputError("line " + std::to_string(line_no) + " has " +
                       std::to_string(cells.size()) + " fields, header has " +
                       std::to_string(header.size()));
    }
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
      values.push_back(ParseDouble(cells[static_cast<std::size_t>(feature_cols[f])],
                                   line_no, out.feature_names[f]));
    }
    const int label =
        ParseIndex(cells[static_cast<std::size_t>(label_col)], line_no, "label");
    out.labels.push_back(label);
    max_label = std::max(max_label, label);
    const std::string_view s_cell = cells[static_cast<std::size_t>(sensitive_col)];
    if (s_cell.empty()) {
      out.sensitive.emplace_back();
    } else {
      const int s = ParseIndex(s_cell, line_no, "sensitive");
      out.sensitive.emplace_back(s);
      max_sensitive = std::max(max_sensitive, s);
    }
  }
  if (out.labels.empty()) throw InputError("CSV has a header but no rows");
  const auto n = static_cast<Eigen::Index>(out.labels.size());
  const auto d = static_cast<Eigen::Index>(feature_cols.size());
  out.features =
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                     Eigen::RowMajor>>(values.data(), n, d);
  out.m = std::max(2, max_label + 1);
  out.k = std::max(2, max_sensitive + 1);
  out.Validate();
  return out;
}

LabeledDataset LoadCsv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open data file " + path);
  return ReadCsv(in);
}

void WriteCsv(const LabeledDataset& dataset, std::ostream& out) {
  for (int c = 0; c < dataset.d(); ++c) {
    out << (static_cast<std::size_t>(c) < dataset.feature_names.size()
                ? dataset.feature_names[static_cast<std::size_t>(c)]
                : "x" + std::to_string(c))
        << ',';
  }
  out << "label,sensitive\n";
  for (std::int64_t i = 0; i < dataset.size(); ++i) {
    for (int c = 0; c < dataset.d(); ++c) {
      out << FormatDouble(dataset.features(i, c)) << ',';
    }
    out << dataset.labels[static_cast<std::size_t>(i)] << ',';
    if (const auto& s = dataset.sensitive[static_cast<std::size_t>(i)]) out << *s;
    out << '\n';
  }
}

void SaveCsv(const LabeledDataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open " + path + " for writing");
  WriteCsv(dataset, out);
}

}  // namespace fermi
