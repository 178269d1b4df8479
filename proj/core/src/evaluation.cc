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

#include "fermi/evaluation.h"

#include <atomic>
#include <charconv>
#include <chrono>
#include <exception>
#include <limits>
#include <ostream>
#include <thread>

#include "fermi/errors.h"
#include "json.hpp"

namespace fermi {
namespace {

// Divergences of the prediction table restricted to predicted classes with
// positive mass. A predictor with a single attained class is independent of
// the sensitive attribute, so every measure is zero.
DivergenceReport SupportDivergences(const JointTable& table) {
  const Marginals mg = ComputeMarginals(table);
  std::vector<Eigen::Index> support;
  for (Eigen::Index j = 0; j < mg.p_yhat.size(); ++j) {
    if (mg.p_yhat(j) > 0.0) support.push_back(j);
  }
  if (support.size() < 2) return DivergenceReport{};
  if (support.size() == static_cast<std::size_t>(table.m())) {
    return ComputeDivergences(table);
  }
  const Eigen::MatrixXd restricted = table.entries()(support, Eigen::all);
  return ComputeDivergences(JointTable(restricted));
}

std::vector<int> ObservedLabels(const LabeledDataset& dataset) {
  std::vector<bool> seen(static_cast<std::size_t>(dataset.m), false);
  for (int y : dataset.labels) seen[static_cast<std::size_t>(y)] = true;
  std::vector<int> out;
  for (int c = 0; c < dataset.m; ++c) {
    if (seen[static_cast<std::size_t>(c)]) out.push_back(c);
  }
  return out;
}

// Undefined when a conditioning class is empty or lacks a sensitive group.
double ConditionalLinfOrNan(const Eigen::MatrixXd& dist, const Eigen::MatrixXd& onehot,
                            std::span<const int> labels, std::span<const int> classes) {
  try {
    return EoConditionalLinf(ConditionalJoints(dist, onehot, labels, classes));
  } catch (const InputError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

std::string Optional(const std::optional<double>& v) {
  return v ? FormatDouble(*v) : std::string();
}

}  // namespace

std::vector<int> DefaultAdvantagedSet() { return {1}; }

std::string FormatDouble(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::vector<int> HardPredictions(const LinearSoftmaxModel& model,
                                 const Eigen::MatrixXd& features) {
  std::vector<int> out(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const Eigen::VectorXd z = model.Logits(features.row(i).transpose());
    int best = 0;
    for (int j = 1; j < z.size(); ++j) {
      if (z(j) > z(best)) best = j;
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

FairnessReport EvaluateDistribution(const Eigen::MatrixXd& prediction_dist,
                                    const LabeledDataset& dataset,
                                    const FairnessNotion& notion) {
  dataset.Validate();
  if (dataset.NumMasked() > 0) {
    throw InputError("evaluation needs every sensitive attribute; " +
                     std::to_string(dataset.NumMasked()) + " rows are masked");
  }
  if (prediction_dist.rows() != dataset.size() ||
      prediction_dist.cols() != dataset.m) {
    throw InputError("prediction matrix does not match the dataset");
  }
  std::vector<int> s(dataset.sensitive.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = *dataset.sensitive[i];
  const Eigen::MatrixXd onehot = OneHot(s, dataset.k);

  FairnessReport out;
  out.n_test = dataset.size();
  double correct = 0.0;
  for (std::int64_t i = 0; i < dataset.size(); ++i) {
    correct += prediction_dist(i, dataset.labels[static_cast<std::size_t>(i)]);
  }
  out.accuracy = correct / static_cast<double>(dataset.size());
  out.test_error = 1.0 - out.accuracy;

  const JointTable table = EmpiricalJoint(prediction_dist, onehot);
  out.dp_linf = DpConditionalLinf(table);
  out.divergence = SupportDivergences(table);
  out.eodds_linf = ConditionalLinfOrNan(prediction_dist, onehot, dataset.labels,
                                        ObservedLabels(dataset));
  const std::vector<int> advantaged =
      notion.kind == FairnessKind::kEqualOpportunity && !notion.advantaged_set.empty()
          ? notion.advantaged_set
          : DefaultAdvantagedSet();
  out.eopp_linf = ConditionalLinfOrNan(prediction_dist, onehot, dataset.labels, advantaged);
  return out;
}

FairnessReport Evaluate(const LinearSoftmaxModel& model,
                        const LabeledDataset& dataset,
                        const FairnessNotion& notion) {
  const std::vector<int> preds = HardPredictions(model, dataset.features);
  return EvaluateDistribution(OneHot(preds, model.num_classes()), dataset, notion);
}

int MajorityLabel(const LabeledDataset& dataset) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(dataset.m), 0);
  for (int y : dataset.labels) ++counts[static_cast<std::size_t>(y)];
  int best = 0;
  for (int c = 1; c < dataset.m; ++c) {
    if (counts[static_cast<std::size_t>(c)] > counts[static_cast<std::size_t>(best)]) best = c;
  }
  return best;
}

std::vector<BaselinePoint> NaiveBaselineCurve(const LinearSoftmaxModel& base_model,
                                              int majority_label,
                                              const LabeledDataset& dataset,
                                              const FairnessNotion& notion,
                                              const std::vector<double>& grid) {
  if (majority_label < 0 || majority_label >= base_model.num_classes()) {
    throw InputError("majority label out of range");
  }
  const std::vector<int> preds = HardPredictions(base_model, dataset.features);
  const Eigen::MatrixXd model_dist = OneHot(preds, base_model.num_classes());
  Eigen::MatrixXd constant_dist =
      Eigen::MatrixXd::Zero(dataset.size(), base_model.num_classes());
  constant_dist.col(majority_label).setOnes();

  std::vector<BaselinePoint> out;
  out.reserve(grid.size());
  for (double p : grid) {
    if (!(p >= 0.0 && p <= 1.0)) throw InputError("baseline p must lie in [0, 1]");
    const Eigen::MatrixXd mixed = (1.0 - p) * model_dist + p * constant_dist;
    out.push_back({p, EvaluateDistribution(mixed, dataset, notion)});
  }
  return out;
}

SweepResult Sweep(const LabeledDataset& dataset, const FairnessNotion& notion,
                  const std::vector<double>& lambdas,
                  const std::vector<std::optional<int>>& batch_sizes,
                  const std::vector<std::uint64_t>& seeds,
                  const SweepOptions& options) {
  auto [train, test] = Split(dataset, options.test_fraction, options.split_seed);
  if (options.train_mask_fraction > 0.0) {
    train = MaskSensitive(train, options.train_mask_fraction, options.mask_seed);
  }

  SweepResult result;
  for (double lambda : lambdas) {
    for (const auto& batch : batch_sizes) {
      for (std::uint64_t seed : seeds) {
        SweepRow row;
        row.lambda = lambda;
        row.batch_size = batch;
        row.seed = seed;
        result.rows.push_back(row);
      }
    }
  }

  auto run_row = [&](SweepRow& row) {
    const auto start = std::chrono::steady_clock::now();
    try {
      SolverConfig config = options.solver;
      config.lambda = row.lambda;
      config.batch_size = row.batch_size;
      config.seed = row.seed;
      const TrainResult trained =
          SgdaTrain(train, LinearSoftmaxModel(train.m, train.d()), notion, config);
      row.report = Evaluate(trained.model, test, notion);
    } catch (const std::exception& e) {
      row.report.reset();
      row.error = e.what();
    }
    row.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  const int jobs = std::max(1, options.jobs);
  if (jobs == 1) {
    for (auto& row : result.rows) run_row(row);
    return result;
  }
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> workers;
    for (int j = 0; j < jobs; ++j) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < result.rows.size(); i = next++) {
          run_row(result.rows[i]);
        }
      });
    }
  }
  return result;
}

void WriteCurveCsv(const SweepResult& result, std::ostream& out) {
  out << "lambda,batch_size,seed,accuracy,dp_linf,eodds_linf,eopp_linf,ermi,"
         "shannon_mi,renyi_corr,wall_time_s\n";
  for (const SweepRow& row : result.rows) {
    out << FormatDouble(row.lambda) << ','
        << (row.batch_size ? std::to_string(*row.batch_size) : std::string("full"))
        << ',' << row.seed << ',';
    if (row.report) {
      const FairnessReport& r = *row.report;
      out << FormatDouble(r.accuracy) << ',' << FormatDouble(r.dp_linf) << ','
          << FormatDouble(r.eodds_linf) << ',' << FormatDouble(r.eopp_linf) << ','
          << FormatDouble(r.divergence.ermi) << ','
          << FormatDouble(r.divergence.shannon_mi) << ','
          << FormatDouble(r.divergence.renyi_correlation) << ',';
    } else {
      out << ",,,,,,,";
    }
    out << FormatDouble(row.wall_time_s) << '\n';
  }
}

void WriteBaselineCsv(const std::vector<BaselinePoint>& points, std::ostream& out) {
  out << "p,accuracy,dp_linf,eodds_linf,eopp_linf,ermi,shannon_mi,renyi_corr\n";
  for (const BaselinePoint& pt : points) {
    const FairnessReport& r = pt.report;
    out << FormatDouble(pt.p) << ',' << FormatDouble(r.accuracy) << ','
        << FormatDouble(r.dp_linf) << ',' << FormatDouble(r.eodds_linf) << ','
        << FormatDouble(r.eopp_linf) << ',' << FormatDouble(r.divergence.ermi) << ','
        << FormatDouble(r.divergence.shannon_mi) << ','
        << FormatDouble(r.divergence.renyi_correlation) << '\n';
  }
}

void WriteTraceCsv(const TrainTrace& trace, std::ostream& out) {
  out << "iteration,loss,psi_avg,ermi_fullbatch,phi_grad_norm\n";
  for (const TraceRecord& rec : trace.records) {
    out << rec.iteration << ',' << Optional(rec.loss) << ',' << Optional(rec.psi_avg)
        << ',' << Optional(rec.ermi_fullbatch) << ',' << Optional(rec.phi_grad_norm)
        << '\n';
  }
}

std::string ReportToJson(const FairnessReport& report) {
  const DivergenceReport& d = report.divergence;
  nlohmann::ordered_json div;
  div["ermi"] = d.ermi;
  div["shannon_mi"] = d.shannon_mi;
  div["renyi_mi_2"] = d.renyi_mi_2;
  div["renyi_correlation"] = d.renyi_correlation;
  div["pearson"] = d.pearson ? nlohmann::ordered_json(*d.pearson) : nullptr;
  div["l1_violation"] = d.l1_violation;
  div["linf_violation"] = d.linf_violation;
  div["dp_conditional_linf"] = d.dp_conditional_linf;

  nlohmann::ordered_json j;
  j["accuracy"] = report.accuracy;
  j["test_error"] = report.test_error;
  j["dp_linf"] = report.dp_linf;
  j["eodds_linf"] = report.eodds_linf;
  j["eopp_linf"] = report.eopp_linf;
  j["n_test"] = report.n_test;
  j["divergence"] = std::move(div);
  return j.dump(2) + "\n";
}

}  // namespace fermi
