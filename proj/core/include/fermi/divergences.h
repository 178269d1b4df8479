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

#ifndef FERMI_DIVERGENCES_H_
#define FERMI_DIVERGENCES_H_

#include <limits>
#include <optional>

#include <Eigen/Dense>

#include "fermi/prob_tables.h"

namespace fermi {

// Largest sensitive cardinality accepted by the dense eigen-decomposition.
inline constexpr int kMaxEigenDimension = 4096;

inline constexpr double kInfinityNorm = std::numeric_limits<double>::infinity();

// Dependence measures between predictions and the sensitive attribute. All
// information quantities are in nats.
struct DivergenceReport {
  double ermi = 0.0;
  double shannon_mi = 0.0;
  double renyi_mi_2 = 0.0;
  double renyi_correlation = 0.0;
  std::optional<double> pearson;  // binary x binary tables only
  double l1_violation = 0.0;
  double linf_violation = 0.0;
  double dp_conditional_linf = 0.0;
};

// The k x k matrix P(i, j) = (p_s(i) p_s(j))^{-1/2} sum_y p(y,i) p(y,j) / p(y)
// with its eigenvalues sorted in descending order. Its top eigenvalue is 1
// (eigenvector sqrt(p_s)) and trace(P) - 1 equals the ERMI.
struct PMatrix {
  Eigen::MatrixXd entries;
  Eigen::VectorXd eigenvalues;

  double SecondEigenvalue() const { return eigenvalues(1); }
};

// Exponential Renyi mutual information, i.e. the chi-squared divergence
// between the joint table and the product of its marginals:
//   sum_{j,r} p(j,r)^2 / (p(j) p(r)) - 1.
// Throws NumericalError if any marginal is zero.
double Ermi(const JointTable& table);

// sum_y w_y * Ermi(table_y).
double ErmiConditional(const ConditionalTables& tables);

// sum p(j,r) ln(p(j,r) / (p(j) p(r))), with 0 ln 0 := 0.
double ShannonMi(const JointTable& table);

// Order-2 Renyi mutual information, ln sum_{j,r} p(j,r)^2 / (p(j) p(r)).
double RenyiMi2(const JointTable& table);

PMatrix ComputePMatrix(const JointTable& table);

// sqrt of the second-largest eigenvalue of P: the maximal correlation.
double RenyiCorrelation(const JointTable& table);

// Pearson correlation of the {0,1} encodings of a 2x2 table. Throws
// InputError for non-binary tables and NumericalError for a degenerate
// (zero-variance) marginal.
double Pearson(const JointTable& table);

// (sum |p(j,r) - p(j) p(r)|^q)^{1/q}; pass kInfinityNorm for the max norm.
// Throws InputError for q < 1.
double LqViolation(const JointTable& table, double q);

// max_{j,r} |p(j | s=r) - p(j)|.
double DpConditionalLinf(const JointTable& table);

// sum_y w_y * DpConditionalLinf(table_y).
double EoConditionalLinf(const ConditionalTables& tables);

DivergenceReport ComputeDivergences(const JointTable& table);

}  // namespace fermi

#endif  // FERMI_DIVERGENCES_H_
