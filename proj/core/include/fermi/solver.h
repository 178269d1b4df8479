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

#ifndef FERMI_SOLVER_H_
#define FERMI_SOLVER_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "fermi/data.h"
#include "fermi/model.h"
#include "fermi/prob_tables.h"
#include "fermi/random.h"

namespace fermi {

enum class FairnessKind { kDemographicParity, kEqualizedOdds, kEqualOpportunity };

struct FairnessNotion {
  FairnessKind kind = FairnessKind::kDemographicParity;
  // Conditioning classes for equal opportunity; ignored otherwise.
  std::vector<int> advantaged_set;

  // "dp", "eodds" or "eopp".
  std::string Name() const;
  void Validate(int num_classes) const;
};

// Parses "dp" | "eodds" | "eopp". Throws InputError on anything else, or on
// an empty advantaged set for "eopp".
FairnessNotion ParseFairnessNotion(std::string_view name,
                                   std::vector<int> advantaged_set = {});

// The ascent variables: one k x m matrix per conditioning block, together
// with the fixed per-block scale p(s | block)^{-1/2} computed from the
// observed sensitive attributes of the training set.
//
// Demographic parity uses a single block covering every row. Equalized odds
// uses one block per label value observed among rows with a known sensitive
// attribute; equal opportunity one block per advantaged class. A row
// contributes to the fairness term iff its sensitive value is observed and its
// label maps to a block.
struct WBlock {
  FairnessKind kind = FairnessKind::kDemographicParity;
  std::vector<int> classes;  // conditioning label per block; empty for dp
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> sensitive_scale;

  int num_blocks() const { return static_cast<int>(w.size()); }
  // Block index for a row with this label, or -1 if it does not contribute.
  int BlockForLabel(int label) const;
  // Block index for dataset row `i`, or -1.
  int BlockForRow(const LabeledDataset& dataset, std::int64_t i) const;
};

// Zero W matrices and scales for `notion` on `dataset`. Throws InputError if
// no row has an observed sensitive value, if a required class has no such
// rows, or if some sensitive value never occurs within a block.
WBlock InitWBlock(const LabeledDataset& dataset, const FairnessNotion& notion);

// Per-sample estimator
//   psi = -sum_l f_l ||W_{.,l}||^2 + 2 scale(r) sum_j W_{r,j} f_j - 1,
// whose average over the contributing rows equals the variational objective
// evaluated at the empirical table.
double PsiHat(const Eigen::VectorXd& f, int r, int block, const WBlock& w);

// d psi / dW = -2 W diag(f) + 2 scale(r) e_r f^T   (k x m).
Eigen::MatrixXd GradWPsi(const Eigen::VectorXd& f, int r, int block,
                         const WBlock& w);

// jac^T g with g_j = -||W_{.,j}||^2 + 2 scale(r) W_{r,j}; `jac` is the
// m x P model Jacobian at the same point as `f`.
ParamVector GradThetaPsi(const Eigen::MatrixXd& jac, const Eigen::VectorXd& f,
                         int r, int block, const WBlock& w);

// -Tr(W P_yhat W^T) + 2 Tr(W P_{yhat,s} P_s^{-1/2}) - 1.
double VariationalValue(const Eigen::MatrixXd& w, const JointTable& table);

// Closed-form maximizer W* = P_s^{-1/2} P_{yhat,s}^T P_yhat^{-1}, i.e.
// W*(r, l) = p(l, r) / (p(l) sqrt(p(r))). Throws NumericalError on a zero
// marginal.
Eigen::MatrixXd WStar(const JointTable& table);

// Euclidean projection onto the Frobenius ball of the given radius.
Eigen::MatrixXd ProjectW(const Eigen::MatrixXd& w, double radius);

// 2 / (min_class_prob * sqrt(min_sensitive_prob)).
double ProjectionRadius(double min_class_prob, double min_sensitive_prob);

struct SolverConfig {
  double lambda = 0.0;
  double eta_theta = 0.005;
  // The effective ascent step is min(eta_w, 1 / (2 lambda)), which keeps the
  // per-coordinate contraction 1 - 2 lambda eta_w f_l inside [0, 1).
  double eta_w = 0.05;
  std::optional<int> batch_size = 1;  // nullopt: full batch
  std::int64_t iterations = 1000;
  std::uint64_t seed = 0;
  bool project = false;
  double min_class_prob = 1e-3;
  bool one_pass = false;
  // Full-batch diagnostics every this many iterations; 0 disables all but
  // the final probe.
  std::int64_t diagnostic_every = 100;

  void Validate(std::int64_t num_rows) const;
  double EffectiveEtaW() const;
};

// Batch index generator shared by the solver and by tests that replay its
// sampling. With replacement: batch_size independent UniformIndex(n) draws
// per call. One-pass: one seeded Fisher-Yates shuffle, consumed in
// consecutive chunks (the last may be short), then exhausted. Full batch:
// 0..n-1 every call.
class MinibatchSampler {
 public:
  MinibatchSampler(std::int64_t n, std::optional<int> batch_size, bool one_pass,
                   std::uint64_t seed);

  // Returns false once a one-pass schedule is exhausted.
  bool Next(std::vector<std::int64_t>& batch);

  // Number of batches a one-pass schedule yields, or nullopt if unbounded.
  std::optional<std::int64_t> Capacity() const;

 private:
  std::int64_t n_;
  std::int64_t batch_;
  bool one_pass_;
  bool full_;
  SplitMix64 rng_;
  std::vector<std::int64_t> order_;
  std::int64_t cursor_ = 0;
};

struct TraceRecord {
  std::int64_t iteration = 0;
  std::optional<double> loss;      // minibatch mean cross-entropy
  std::optional<double> psi_avg;   // minibatch mean psi over contributing rows
  std::optional<double> ermi_fullbatch;
  std::optional<double> phi_grad_norm;
  bool degenerate = false;  // probe skipped: a prediction marginal fell below 1e-12
};

struct TrainTrace {
  std::vector<TraceRecord> records;
  // Batches that held no row with an observed sensitive attribute in a
  // fairness block; they contribute only the loss gradient.
  std::int64_t skipped_fairness_batches = 0;
  std::int64_t iterations_run = 0;
  // Parameters at a uniformly drawn iterate t_hat in {1, ..., iterations_run}.
  std::int64_t random_iterate = 0;
  ParamVector random_iterate_params;
};

struct TrainResult {
  LinearSoftmaxModel model;
  WBlock w;
  TrainTrace trace;
};

// Stochastic gradient descent-ascent on
//   min_theta max_W  mean_i loss_i + lambda * mean_{contributing i} psi_i.
// Returns the final iterate. Bit-reproducible for a fixed seed.
TrainResult SgdaTrain(const LabeledDataset& dataset,
                      const LinearSoftmaxModel& model_init,
                      const FairnessNotion& notion, const SolverConfig& config);

// Full-batch gradient of mean loss + lambda * (conditional) ERMI at the
// model. By Danskin's theorem this is the theta-gradient of the min-max
// objective at W = W*(theta) of each block table. Throws NumericalError if
// some prediction marginal is below 1e-12.
ParamVector PhiGradient(const LinearSoftmaxModel& model,
                        const LabeledDataset& dataset,
                        const FairnessNotion& notion, double lambda);

// Norm of the full-batch gradient of mean loss + lambda * (conditional) ERMI
// at the model, evaluated through W* of the current empirical tables.
// Throws NumericalError if some prediction marginal is below 1e-12.
double PhiGradNorm(const LinearSoftmaxModel& model, const LabeledDataset& dataset,
                   const FairnessNotion& notion, double lambda);

// Full-batch fairness value: ERMI of the block tables weighted by their
// contributing row counts.
double FullBatchErmi(const LinearSoftmaxModel& model,
                     const LabeledDataset& dataset, const WBlock& w);

// Largest relative deviation, over objective value, theta-gradient and
// W-gradient, between the average of the per-sample stochastic quantities
// (enumerated over every row) and the same quantities assembled from
// full-batch tables.
double UnbiasednessAudit(const LabeledDataset& dataset,
                         const LinearSoftmaxModel& model,
                         const FairnessNotion& notion, const WBlock& w,
                         double lambda = 1.0);

// Soft-prediction joint table of each block at the model.
std::vector<JointTable> BlockTables(const LinearSoftmaxModel& model,
                                    const LabeledDataset& dataset,
                                    const WBlock& w);

}  // namespace fermi

#endif  // FERMI_SOLVER_H_
