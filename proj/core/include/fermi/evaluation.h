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

#ifndef FERMI_EVALUATION_H_
#define FERMI_EVALUATION_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fermi/data.h"
#include "fermi/divergences.h"
#include "fermi/model.h"
#include "fermi/solver.h"

namespace fermi {

// Fairness and accuracy of a predictor on a fully labeled test set. The
// violations are computed on hard (argmax) predictions.
struct FairnessReport {
  double accuracy = 0.0;
  double test_error = 0.0;
  double dp_linf = 0.0;     // DpConditionalLinf of the prediction table
  // EoConditionalLinf over every observed label and over the advantaged set.
  // NaN when some conditioning class is empty or misses a sensitive group.
  double eodds_linf = 0.0;
  double eopp_linf = 0.0;
  DivergenceReport divergence;
  std::int64_t n_test = 0;
};

// Advantaged set used for eopp_linf when the notion does not carry one.
std::vector<int> DefaultAdvantagedSet();

// argmax per row, ties to the lower class index.
std::vector<int> HardPredictions(const LinearSoftmaxModel& model,
                                 const Eigen::MatrixXd& features);

// Report for a (possibly randomized) predictor given as an N x m matrix of
// per-row output distributions; one-hot rows describe a deterministic
// predictor. Accuracy is the expected accuracy. Throws InputError if any
// sensitive attribute is masked or a sensitive value is absent.
FairnessReport EvaluateDistribution(const Eigen::MatrixXd& prediction_dist,
                                    const LabeledDataset& dataset,
                                    const FairnessNotion& notion);

FairnessReport Evaluate(const LinearSoftmaxModel& model,
                        const LabeledDataset& dataset,
                        const FairnessNotion& notion);

struct BaselinePoint {
  double p = 0.0;
  FairnessReport report;
};

// The predictor that outputs `majority_label` with probability p and the base
// model's prediction otherwise, evaluated exactly as a mixture.
std::vector<BaselinePoint> NaiveBaselineCurve(const LinearSoftmaxModel& base_model,
                                              int majority_label,
                                              const LabeledDataset& dataset,
                                              const FairnessNotion& notion,
                                              const std::vector<double>& grid);

// Most frequent label, ties to the lower index.
int MajorityLabel(const LabeledDataset& dataset);

struct SweepOptions {
  SolverConfig solver;  // lambda, batch size and seed are overridden per row
  double test_fraction = 0.2;
  std::uint64_t split_seed = 0;
  // Fraction of training rows whose sensitive attribute is masked before
  // training (the test side is never masked).
  double train_mask_fraction = 0.0;
  std::uint64_t mask_seed = 0;
  int jobs = 1;
};

struct SweepRow {
  double lambda = 0.0;
  std::optional<int> batch_size;  // nullopt: full batch
  std::uint64_t seed = 0;
  std::optional<FairnessReport> report;
  std::string error;  // set when training or evaluation failed
  double wall_time_s = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // ordered by (lambda, batch, seed)
};

// Trains one model per (lambda, batch size, seed) triple on a shared split
// and evaluates it on the test side. Failures are recorded per row.
SweepResult Sweep(const LabeledDataset& dataset, const FairnessNotion& notion,
                  const std::vector<double>& lambdas,
                  const std::vector<std::optional<int>>& batch_sizes,
                  const std::vector<std::uint64_t>& seeds,
                  const SweepOptions& options);

// Shortest round-trip decimal form.
std::string FormatDouble(double value);

// lambda,batch_size,seed,accuracy,dp_linf,eodds_linf,eopp_linf,ermi,
// shannon_mi,renyi_corr,wall_time_s
void WriteCurveCsv(const SweepResult& result, std::ostream& out);
// p,accuracy,dp_linf,eodds_linf,eopp_linf,ermi,shannon_mi,renyi_corr
void WriteBaselineCsv(const std::vector<BaselinePoint>& points, std::ostream& out);
// iteration,loss,psi_avg,ermi_fullbatch,phi_grad_norm
void WriteTraceCsv(const TrainTrace& trace, std::ostream& out);
std::string ReportToJson(const FairnessReport& report);

}  // namespace fermi

#endif  // FERMI_EVALUATION_H_
