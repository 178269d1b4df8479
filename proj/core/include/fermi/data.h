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

#ifndef FERMI_DATA_H_
#define FERMI_DATA_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fermi/random.h"

namespace fermi {

// N rows of (features, label, sensitive attribute). A missing sensitive value
// marks a masked row.
struct LabeledDataset {
  Eigen::MatrixXd features;  // N x d
  std::vector<int> labels;
  std::vector<std::optional<int>> sensitive;
  int m = 2;  // label / prediction cardinality
  int k = 2;  // sensitive cardinality
  std::vector<std::string> feature_names;

  std::int64_t size() const { return static_cast<std::int64_t>(labels.size()); }
  int d() const { return static_cast<int>(features.cols()); }
  std::int64_t NumMasked() const;

  // Throws InputError if any invariant is violated.
  void Validate() const;

  // Rows in the given order; cardinalities are inherited.
  LabeledDataset Subset(std::span<const std::int64_t> rows) const;
};

// Parameters of the biased synthetic generator:
//   s ~ Bernoulli(group_balance)
//   x ~ N(0, I_d), then x[d-1] += bias_strength * s
//   y = 1{ w0 . x + bias_strength * s + noise_sd * eps > 0 },
// with w0 = (1, ..., 1) / sqrt(d) and eps ~ N(0, 1).
struct SynthConfig {
  std::int64_t n = 2000;
  int d = 5;
  double bias_strength = 2.0;
  double group_balance = 0.5;
  double noise_sd = 1.0;
  std::uint64_t seed = 0;

  void Validate() const;
};

// Row-at-a-time form of the generator, for populations too large to hold in
// memory. SynthesizeBiased(cfg) returns exactly the first cfg.n rows of
// SyntheticStream(cfg).
class SyntheticStream {
 public:
  explicit SyntheticStream(const SynthConfig& config);

  // Writes the next row's features into `x` (resized to d).
  void Next(Eigen::VectorXd& x, int& label, int& sensitive);

 private:
  SynthConfig config_;
  SplitMix64 rng_;
  double w0_;
};

LabeledDataset SynthesizeBiased(const SynthConfig& config);

// Masks exactly floor(fraction * N) rows chosen uniformly at random
// (partial Fisher-Yates). Rows already masked stay masked.
LabeledDataset MaskSensitive(const LabeledDataset& dataset, double fraction,
                             std::uint64_t seed);

// Seeded shuffle split; the test side gets round(test_fraction * N) rows.
// Throws InputError if either side would be empty.
std::pair<LabeledDataset, LabeledDataset> Split(const LabeledDataset& dataset,
                                                double test_fraction,
                                                std::uint64_t seed);

// CSV with a header row. Columns named `label` and `sensitive` are reserved;
// every other column is a numeric feature, in file order. An empty
// `sensitive` cell is a masked row. m and k are inferred from the largest
// observed values (at least 2).
LabeledDataset ReadCsv(std::istream& in);
LabeledDataset LoadCsv(const std::string& path);

// Features are written in shortest round-trip form, so ReadCsv(WriteCsv(x))
// reproduces x exactly.
void WriteCsv(const LabeledDataset& dataset, std::ostream& out);
void SaveCsv(const LabeledDataset& dataset, const std::string& path);

}  // namespace fermi

#endif  // FERMI_DATA_H_
