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

#ifndef FERMI_PROB_TABLES_H_
#define FERMI_PROB_TABLES_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fermi {

// Tolerance on the total mass of a joint table.
inline constexpr double kTableSumTolerance = 1e-9;
// Tolerance on each row sum of a model-probability matrix.
inline constexpr double kRowStochasticTolerance = 1e-6;

struct TableViolation {
  enum class Kind { kShape, kNonFinite, kNegative, kNormalization };
  Kind kind;
  std::string message;
};

// Checks the joint-table invariants: at least 2x2, finite, nonnegative
// entries summing to one within kTableSumTolerance. Returns the first
// violation found (row-major scan), or nullopt when the table is valid.
std::optional<TableViolation> Validate(const Eigen::MatrixXd& entries);

// An m x k joint distribution of (predicted class, sensitive value).
// Rows index predictions, columns index sensitive values. Immutable.
class JointTable {
 public:
  // Throws InputError if `entries` violates any invariant.
  explicit JointTable(Eigen::MatrixXd entries);

  const Eigen::MatrixXd& entries() const { return entries_; }
  double operator()(int j, int r) const { return entries_(j, r); }
  int m() const { return static_cast<int>(entries_.rows()); }
  int k() const { return static_cast<int>(entries_.cols()); }

 private:
  Eigen::MatrixXd entries_;
};

struct Marginals {
  Eigen::VectorXd p_yhat;  // length m, row sums
  Eigen::VectorXd p_s;     // length k, column sums
};

// One table per conditioning class, with class weights p(y) restricted to
// the class set and renormalized.
struct ConditionalTables {
  std::vector<int> classes;
  std::vector<JointTable> tables;
  Eigen::VectorXd weights;
};

// Row-wise one-hot encoding of `indices` into an N x k matrix.
// Throws InputError on an index outside [0, k).
Eigen::MatrixXd OneHot(std::span<const int> indices, int k);

// p(j, r) = (1/N) sum_i probs(i, j) * onehot(i, r), accumulated row by row in
// index order. Throws InputError on empty input, mismatched row counts,
// non-stochastic probability rows, malformed one-hot rows, or a sensitive
// value that never occurs.
JointTable EmpiricalJoint(const Eigen::MatrixXd& model_probs,
                          const Eigen::MatrixXd& sensitive_onehot);

Marginals ComputeMarginals(const JointTable& table);

// Builds one EmpiricalJoint per class in `class_set` from the rows whose label
// equals that class. Throws InputError if a class has no rows or if some
// sensitive value is absent within a class.
ConditionalTables ConditionalJoints(const Eigen::MatrixXd& model_probs,
                                    const Eigen::MatrixXd& sensitive_onehot,
                                    std::span<const int> labels,
                                    std::span<const int> class_set);

}  // namespace fermi

#endif  // FERMI_PROB_TABLES_H_
