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

#include "fermi/prob_tables.h"

#include <cmath>
#include <sstream>
#include <utility>

#include "fermi/errors.h"

namespace fermi {
namespace {

std::string Describe(const char* what, int j, int r, double value) {
  std::ostringstream out;
  out.precision(17);
  out << what << " at (" << j << ", " << r << "): " << value;
  return out.str();
}

void CheckInputs(const Eigen::MatrixXd& probs, const Eigen::MatrixXd& onehot) {
  if (probs.rows() == 0) throw InputError("empty input: no rows");
  if (probs.rows() != onehot.rows()) {
    throw InputError("dimension mismatch: " + std::to_string(probs.rows()) +
                     " probability rows vs " + std::to_string(onehot.rows()) +
                     " sensitive rows");
  }
  if (probs.cols() < 2 || onehot.cols() < 2) {
    throw InputError("need at least 2 prediction and 2 sensitive columns");
  }
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    double row_sum = 0.0;
    for (Eigen::Index j = 0; j < probs.cols(); ++j) {
      const double v = probs(i, j);
      if (!std::isfinite(v) || v < 0.0) {
        throw InputError(Describe("invalid probability", static_cast<int>(i),
                                  static_cast<int>(j), v));
      }
      row_sum += v;
    }
    if (std::abs(row_sum - 1.0) > kRowStochasticTolerance) {
      throw InputError("probability row " + std::to_string(i) +
                       " does not sum to 1");
    }
    int ones = 0;
    for (Eigen::Index r = 0; r < onehot.cols(); ++r) {
      const double v = onehot(i, r);
      if (v == 1.0) {
        ++ones;
      } else if (v != 0.0) {
        ones = -1;
        break;
      }
    }
    if (ones != 1) {
      throw InputError("sensitive row " + std::to_string(i) +
                       " is not one-hot");
    }
  }
}

}  // namespace

std::optional<TableViolation> Validate(const Eigen::MatrixXd& entries) {
  using Kind = TableViolation::Kind;
  if (entries.rows() < 2 || entries.cols() < 2) {
    return TableViolation{Kind::kShape,
                          "table must be at least 2x2, got " +
                              std::to_string(entries.rows()) + "x" +
                              std::to_string(entries.cols())};
  }
  double total = 0.0;
  for (Eigen::Index j = 0; j < entries.rows(); ++j) {
    for (Eigen::Index r = 0; r < entries.cols(); ++r) {
      const double v = entries(j, r);
      if (!std::isfinite(v)) {
        return TableViolation{Kind::kNonFinite,
                              Describe("non-finite entry", static_cast<int>(j),
                                       static_cast<int>(r), v)};
      }
      if (v < 0.0) {
        return TableViolation{Kind::kNegative,
                              Describe("negative entry", static_cast<int>(j),
                                       static_cast<int>(r), v)};
      }
      total += v;
    }
  }
  if (std::abs(total - 1.0) > kTableSumTolerance) {
    std::ostringstream out;
    out.precision(17);
    out << "entries sum to " << total << ", expected 1";
    return TableViolation{Kind::kNormalization, out.str()};
  }
  return std::nullopt;
}

JointTable::JointTable(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  if (auto violation = Validate(entries_)) {
    throw InputError("invalid joint table: " + violation->message);
  }
}

Eigen::MatrixXd OneHot(std::span<const int> indices, int k) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(
      static_cast<Eigen::Index>(indices.size()), k);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= k) {
      throw InputError("index " + std::to_string(indices[i]) +
                       " out of range [0, " + std::to_string(k) + ")");
    }
    out(static_cast<Eigen::Index>(i), indices[i]) = 1.0;
  }
  return out;
}

JointTable EmpiricalJoint(const Eigen::MatrixXd& model_probs,
                          const Eigen::MatrixXd& sensitive_onehot) {
  CheckInputs(model_probs, sensitive_onehot);
  const Eigen::Index n = model_probs.rows();
  const Eigen::Index m = model_probs.cols();
  const Eigen::Index k = sensitive_onehot.cols();

  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(m, k);
  std::vector<long> counts(static_cast<std::size_t>(k), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index r = 0;
    while (sensitive_onehot(i, r) != 1.0) ++r;
    ++counts[static_cast<std::size_t>(r)];
    for (Eigen::Index j = 0; j < m; ++j) sums(j, r) += model_probs(i, j);
  }
  for (Eigen::Index r = 0; r < k; ++r) {
    if (counts[static_cast<std::size_t>(r)] == 0) {
      throw InputError("sensitive value " + std::to_string(r) +
                       " never occurs; its marginal would be zero");
    }
  }
  return JointTable(sums / static_cast<double>(n));
}

Marginals ComputeMarginals(const JointTable& table) {
  const Eigen::MatrixXd& p = table.entries();
  Marginals out{Eigen::VectorXd::Zero(p.rows()), Eigen::VectorXd::Zero(p.cols())};
  for (Eigen::Index j = 0; j < p.rows(); ++j) {
    for (Eigen::Index r = 0; r < p.cols(); ++r) {
      out.p_yhat(j) += p(j, r);
      out.p_s(r) += p(j, r);
    }
  }
  return out;
}

ConditionalTables ConditionalJoints(const Eigen::MatrixXd& model_probs,
                                    const Eigen::MatrixXd& sensitive_onehot,
                                    std::span<const int> labels,
                                    std::span<const int> class_set) {
  CheckInputs(model_probs, sensitive_onehot);
  if (static_cast<Eigen::Index>(labels.size()) != model_probs.rows()) {
    throw InputError("dimension mismatch: labels vs probability rows");
  }
  if (class_set.empty()) throw InputError("empty conditioning class set");

  ConditionalTables out;
  std::vector<long> class_counts;
  long total = 0;
  for (int c : class_set) {
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == c) rows.push_back(static_cast<Eigen::Index>(i));
    }
    if (rows.empty()) {
      throw InputError("conditioning class " + std::to_string(c) +
                       " has no samples");
    }
    const Eigen::MatrixXd probs = model_probs(rows, Eigen::all);
    const Eigen::MatrixXd onehot = sensitive_onehot(rows, Eigen::all);
    try {
      out.tables.push_back(EmpiricalJoint(probs, onehot));
    } catch (const InputError& e) {
      throw InputError("conditioning class " + std::to_string(c) + ": " +
                       e.what());
    }
    out.classes.push_back(c);
    class_counts.push_back(static_cast<long>(rows.size()));
    total += static_cast<long>(rows.size());
  }
  out.weights.resize(static_cast<Eigen::Index>(class_counts.size()));
  for (std::size_t c = 0; c < class_counts.size(); ++c) {
    out.weights(static_cast<Eigen::Index>(c)) =
        static_cast<double>(class_counts[c]) / static_cast<double>(total);
  }
  return out;
}

}  // namespace fermi
