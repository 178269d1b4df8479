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

#include "fermi/solver.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "fermi/divergences.h"
#include "fermi/errors.h"

namespace fermi {
namespace {

constexpr double kDegenerateMarginal = 1e-12;

void CheckIndices(const Eigen::VectorXd& f, int r, int block, const WBlock& w) {
  if (block < 0 || block >= w.num_blocks()) {
    throw InputError("block index " + std::to_string(block) + " out of range");
  }
  const Eigen::MatrixXd& mat = w.w[static_cast<std::size_t>(block)];
  if (r < 0 || r >= mat.rows()) {
    throw InputError("sensitive index " + std::to_string(r) + " out of range");
  }
  if (f.size() != mat.cols()) {
    throw InputError("probability vector length does not match W");
  }
}

// coef_j = d psi / d f_j = -||W_{.,j}||^2 + 2 scale(r) W_{r,j}.
Eigen::VectorXd PsiCoefficients(const Eigen::MatrixXd& w, double scale, int r) {
  Eigen::VectorXd coef(w.cols());
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    double sq = 0.0;
    for (Eigen::Index q = 0; q < w.rows(); ++q) sq += w(q, j) * w(q, j);
    coef(j) = -sq + 2.0 * scale * w(r, j);
  }
  return coef;
}

std::vector<std::vector<std::int64_t>> RowsByBlock(const LabeledDataset& dataset,
                                                   const WBlock& w) {
  std::vector<std::vector<std::int64_t>> rows(
      static_cast<std::size_t>(w.num_blocks()));
  for (std::int64_t i = 0; i < dataset.size(); ++i) {
    const int b = w.BlockForRow(dataset, i);
    if (b >= 0) rows[static_cast<std::size_t>(b)].push_back(i);
  }
  return rows;
}

std::int64_t CountContributing(const std::vector<std::vector<std::int64_t>>& rows) {
  std::int64_t n = 0;
  for (const auto& r : rows) n += static_cast<std::int64_t>(r.size());
  return n;
}

void CheckCompatible(const LabeledDataset& dataset, const LinearSoftmaxModel& model,
                     const WBlock& w) {
  if (model.feature_dim() != dataset.d()) {
    throw InputError("model feature dimension does not match the dataset");
  }
  if (model.num_classes() != dataset.m) {
    throw InputError("model class count does not match the dataset");
  }
  for (const auto& mat : w.w) {
    if (mat.rows() != dataset.k || mat.cols() != dataset.m) {
      throw InputError("W block shape does not match (k, m)");
    }
  }
}

struct FullBatchState {
  double ermi = 0.0;
  ParamVector grad;
};

// Gradient of mean loss + lambda * weighted block ERMI through W* of each
// block table, plus the weighted ERMI itself.
FullBatchState FullBatchDanskin(const LinearSoftmaxModel& model,
                                const LabeledDataset& dataset, const WBlock& w,
                                double lambda) {
  const auto rows = RowsByBlock(dataset, w);
  const std::int64_t n_contrib = CountContributing(rows);
  const std::vector<JointTable> tables = BlockTables(model, dataset, w);

  FullBatchState out;
  WBlock star = w;
  for (std::size_t b = 0; b < tables.size(); ++b) {
    const Marginals mg = ComputeMarginals(tables[b]);
    for (Eigen::Index l = 0; l < mg.p_yhat.size(); ++l) {
      if (mg.p_yhat(l) < kDegenerateMarginal) {
        throw NumericalError("prediction marginal of class " + std::to_string(l) +
                             " fell below 1e-12");
      }
    }
    star.w[b] = WStar(tables[b]);
    out.ermi += static_cast<double>(rows[b].size()) /
                static_cast<double>(n_contrib) * Ermi(tables[b]);
  }

  ParamVector loss_grad = ParamVector::Zero(model.num_params());
  ParamVector fair_grad = ParamVector::Zero(model.num_params());
  for (std::int64_t i = 0; i < dataset.size(); ++i) {
    const Eigen::VectorXd x = dataset.features.row(i).transpose();
    loss_grad += model.CrossEntropy(x, dataset.labels[static_cast<std::size_t>(i)]).grad;
    const int b = star.BlockForRow(dataset, i);
    if (b >= 0) {
      fair_grad += GradThetaPsi(model.Jacobian(x), model.PredictProba(x),
                                *dataset.sensitive[static_cast<std::size_t>(i)], b,
                                star);
    }
  }
  out.grad = loss_grad / static_cast<double>(dataset.size()) +
             lambda * fair_grad / static_cast<double>(n_contrib);
  return out;
}

double RelativeDeviation(double diff, double ref) {
  return diff / std::max(ref, 1e-12);
}

}  // namespace

std::string FairnessNotion::Name() const {
  switch (kind) {
    case FairnessKind::kDemographicParity:
      return "dp";
    case FairnessKind::kEqualizedOdds:
      return "eodds";
    case FairnessKind::kEqualOpportunity:
      return "eopp";
  }
  return "dp";
}

void FairnessNotion::Validate(int num_classes) const {
  if (kind != FairnessKind::kEqualOpportunity) return;
  if (advantaged_set.empty()) {
    throw InputError("equal opportunity needs a nonempty advantaged set");
  }
  for (int c : advantaged_set) {
    if (c < 0 || c >= num_classes) {
      throw InputError("advantaged class " + std::to_string(c) + " out of range");
    }
  }
}

FairnessNotion ParseFairnessNotion(std::string_view name,
                                   std::vector<int> advantaged_set) {
  FairnessNotion out;
  if (name == "dp") {
    out.kind = FairnessKind::kDemographicParity;
  } else if (name == "eodds") {
    out.kind = FairnessKind::kEqualizedOdds;
  } else if (name == "eopp") {
    out.kind = FairnessKind::kEqualOpportunity;
    if (advantaged_set.empty()) {
      throw InputError("eopp requires a nonempty advantaged set");
    }
  } else {
    throw InputError("unknown fairness notion '" + std::string(name) +
                     "' (expected dp, eodds or eopp)");
  }
  std::sort(advantaged_set.begin(), advantaged_set.end());
  advantaged_set.erase(std::unique(advantaged_set.begin(), advantaged_set.end()),
                       advantaged_set.end());
  out.advantaged_set = std::move(advantaged_set);
  return out;
}

int WBlock::BlockForLabel(int label) const {
  if (kind == FairnessKind::kDemographicParity) return num_blocks() > 0 ? 0 : -1;
  const auto it = std::lower_bound(classes.begin(), classes.end(), label);
  if (it == classes.end() || *it != label) return -1;
  return static_cast<int>(it - classes.begin());
}

int WBlock::BlockForRow(const LabeledDataset& dataset, std::int64_t i) const {
  if (!dataset.sensitive[static_cast<std::size_t>(i)]) return -1;
  return BlockForLabel(dataset.labels[static_cast<std::size_t>(i)]);
}

WBlock InitWBlock(const LabeledDataset& dataset, const FairnessNotion& notion) {
  dataset.Validate();
  notion.Validate(dataset.m);
  WBlock out;
  out.kind = notion.kind;

  std::vector<int> blocks_of_label(static_cast<std::size_t>(dataset.m), -1);
  switch (notion.kind) {
    case FairnessKind::kDemographicParity:
      std::fill(blocks_of_label.begin(), blocks_of_label.end(), 0);
      break;
    case FairnessKind::kEqualizedOdds: {
      std::vector<bool> seen(static_cast<std::size_t>(dataset.m), false);
      for (std::int64_t i = 0; i < dataset.size(); ++i) {
        if (dataset.sensitive[static_cast<std::size_t>(i)]) {
          seen[static_cast<std::size_t>(dataset.labels[static_cast<std::size_t>(i)])] = true;
        }
      }
      for (int c = 0; c < dataset.m; ++c) {
        if (seen[static_cast<std::size_t>(c)]) out.classes.push_back(c);
      }
      break;
    }
    case FairnessKind::kEqualOpportunity:
      out.classes = notion.advantaged_set;
      break;
  }
  const int num_blocks = notion.kind == FairnessKind::kDemographicParity
                             ? 1
                             : static_cast<int>(out.classes.size());
  if (num_blocks == 0) {
    throw InputError("no row has an observed sensitive attribute");
  }
  out.w.assign(static_cast<std::size_t>(num_blocks),
               Eigen::MatrixXd::Zero(dataset.k, dataset.m));

  std::vector<std::vector<std::int64_t>> counts(
      static_cast<std::size_t>(num_blocks),
      std::vector<std::int64_t>(static_cast<std::size_t>(dataset.k), 0));
  for (std::int64_t i = 0; i < dataset.size(); ++i) {
    const int b = out.BlockForRow(dataset, i);
    if (b >= 0) {
      ++counts[static_cast<std::size_t>(b)]
              [static_cast<std::size_t>(*dataset.sensitive[static_cast<std::size_t>(i)])];
    }
  }
  for (int b = 0; b < num_blocks; ++b) {
    const auto& c = counts[static_cast<std::size_t>(b)];
    const std::int64_t total = std::accumulate(c.begin(), c.end(), std::int64_t{0});
    const std::string where =
        notion.kind == FairnessKind::kDemographicParity
            ? std::string("the training set")
            : "conditioning class " +
                  std::to_string(out.classes[static_cast<std::size_t>(b)]);
    if (total == 0) {
      throw InputError("no observed sensitive attribute in " + where);
    }
    Eigen::VectorXd scale(dataset.k);
    for (int r = 0; r < dataset.k; ++r) {
      if (c[static_cast<std::size_t>(r)] == 0) {
        throw InputError("sensitive value " + std::to_string(r) +
                         " is missing from " + where);
      }
      scale(r) = 1.0 / std::sqrt(static_cast<double>(c[static_cast<std::size_t>(r)]) /
                                 static_cast<double>(total));
    }
    out.sensitive_scale.push_back(std::move(scale));
  }
  return out;
}

double PsiHat(const Eigen::VectorXd& f, int r, int block, const WBlock& w) {
  CheckIndices(f, r, block, w);
  const auto b = static_cast<std::size_t>(block);
  const Eigen::VectorXd coef = PsiCoefficients(w.w[b], w.sensitive_scale[b](r), r);
  double sum = 0.0;
  for (Eigen::Index j = 0; j < f.size(); ++j) sum += f(j) * coef(j);
  return sum - 1.0;
}

Eigen::MatrixXd GradWPsi(const Eigen::VectorXd& f, int r, int block,
                         const WBlock& w) {
  CheckIndices(f, r, block, w);
  const auto b = static_cast<std::size_t>(block);
  const Eigen::MatrixXd& mat = w.w[b];
  const double scale = w.sensitive_scale[b](r);
  Eigen::MatrixXd grad(mat.rows(), mat.cols());
  for (Eigen::Index l = 0; l < mat.cols(); ++l) {
    for (Eigen::Index q = 0; q < mat.rows(); ++q) {
      grad(q, l) = -2.0 * mat(q, l) * f(l);
    }
    grad(r, l) += 2.0 * scale * f(l);
  }
  return grad;
}

ParamVector GradThetaPsi(const Eigen::MatrixXd& jac, const Eigen::VectorXd& f,
                         int r, int block, const WBlock& w) {
  CheckIndices(f, r, block, w);
  if (jac.rows() != f.size()) {
    throw InputError("Jacobian row count does not match the class count");
  }
  const auto b = static_cast<std::size_t>(block);
  const Eigen::VectorXd coef = PsiCoefficients(w.w[b], w.sensitive_scale[b](r), r);
  ParamVector out = ParamVector::Zero(jac.cols());
  for (Eigen::Index l = 0; l < jac.rows(); ++l) {
    out += coef(l) * jac.row(l).transpose();
  }
  return out;
}

double VariationalValue(const Eigen::MatrixXd& w, const JointTable& table) {
  if (w.rows() != table.k() || w.cols() != table.m()) {
    throw InputError("W must be k x m");
  }
  const Marginals mg = ComputeMarginals(table);
  double value = 0.0;
  for (Eigen::Index l = 0; l < w.cols(); ++l) {
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      if (!(mg.p_s(r) > 0.0)) throw NumericalError("zero sensitive marginal");
      value += -w(r, l) * w(r, l) * mg.p_yhat(l) +
               2.0 * w(r, l) * table(static_cast<int>(l), static_cast<int>(r)) /
                   std::sqrt(mg.p_s(r));
    }
  }
  return value - 1.0;
}

Eigen::MatrixXd WStar(const JointTable& table) {
  const Marginals mg = ComputeMarginals(table);
  Eigen::MatrixXd out(table.k(), table.m());
  for (int r = 0; r < table.k(); ++r) {
    if (!(mg.p_s(r) > 0.0)) throw NumericalError("zero sensitive marginal");
    for (int l = 0; l < table.m(); ++l) {
      if (!(mg.p_yhat(l) > 0.0)) throw NumericalError("zero prediction marginal");
      out(r, l) = table(l, r) / (mg.p_yhat(l) * std::sqrt(mg.p_s(r)));
    }
  }
  return out;
}

Eigen::MatrixXd ProjectW(const Eigen::MatrixXd& w, double radius) {
  const double norm = w.norm();
  if (norm <= radius) return w;
  return w * (radius / norm);
}

double ProjectionRadius(double min_class_prob, double min_sensitive_prob) {
  if (!(min_class_prob > 0.0) || !(min_sensitive_prob > 0.0)) {
    throw InputError("projection radius needs positive probability floors");
  }
  return 2.0 / (min_class_prob * std::sqrt(min_sensitive_prob));
}

void SolverConfig::Validate(std::int64_t num_rows) const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InputError("lambda must be finite and >= 0");
  }
  if (!(eta_theta > 0.0) || !(eta_w > 0.0)) {
    throw InputError("step sizes must be positive");
  }
  if (batch_size && (*batch_size < 1 || *batch_size > num_rows)) {
    throw InputError("batch size must lie in [1, N]");
  }
  if (iterations < 1) throw InputError("iterations must be >= 1");
  if (!(min_class_prob > 0.0 && min_class_prob <= 1.0)) {
    throw InputError("min class probability must lie in (0, 1]");
  }
  if (diagnostic_every < 0) throw InputError("diagnostic interval must be >= 0");
}

double SolverConfig::EffectiveEtaW() const {
  return lambda > 0.0 ? std::min(eta_w, 1.0 / (2.0 * lambda)) : eta_w;
}

MinibatchSampler::MinibatchSampler(std::int64_t n, std::optional<int> batch_size,
                                   bool one_pass, std::uint64_t seed)
    : n_(n),
      batch_(batch_size ? *batch_size : n),
      one_pass_(one_pass),
      full_(!batch_size.has_value()),
      rng_(seed) {
  if (n_ < 1 || batch_ < 1 || batch_ > n_) {
    throw InputError("invalid minibatch configuration");
  }
  if (one_pass_) {
    order_.resize(static_cast<std::size_t>(n_));
    std::iota(order_.begin(), order_.end(), 0);
    Shuffle(std::span<std::int64_t>(order_), rng_);
  }
}

bool MinibatchSampler::Next(std::vector<std::int64_t>& batch) {
  batch.clear();
  if (one_pass_) {
    if (cursor_ >= n_) return false;
    const std::int64_t end = std::min(n_, cursor_ + batch_);
    batch.assign(order_.begin() + cursor_, order_.begin() + end);
    cursor_ = end;
    return true;
  }
  if (full_) {
    batch.resize(static_cast<std::size_t>(n_));
    std::iota(batch.begin(), batch.end(), 0);
    return true;
  }
  batch.reserve(static_cast<std::size_t>(batch_));
  for (std::int64_t q = 0; q < batch_; ++q) {
    batch.push_back(static_cast<std::int64_t>(
        rng_.UniformIndex(static_cast<std::uint64_t>(n_))));
  }
  return true;
}

std::optional<std::int64_t> MinibatchSampler::Capacity() const {
  if (!one_pass_) return std::nullopt;
  return (n_ + batch_ - 1) / batch_;
}

std::vector<JointTable> BlockTables(const LinearSoftmaxModel& model,
                                    const LabeledDataset& dataset,
                                    const WBlock& w) {
  const auto rows = RowsByBlock(dataset, w);
  std::vector<JointTable> tables;
  tables.reserve(rows.size());
  for (std::size_t b = 0; b < rows.size(); ++b) {
    const auto& idx = rows[b];
    if (idx.empty()) throw InputError("a fairness block has no contributing rows");
    Eigen::MatrixXd probs(static_cast<Eigen::Index>(idx.size()), dataset.m);
    std::vector<int> s(idx.size());
    for (std::size_t q = 0; q < idx.size(); ++q) {
      probs.row(static_cast<Eigen::Index>(q)) =
          model.PredictProba(dataset.features.row(idx[q]).transpose()).transpose();
      s[q] = *dataset.sensitive[static_cast<std::size_t>(idx[q])];
    }
    tables.push_back(EmpiricalJoint(probs, OneHot(s, dataset.k)));
  }
  return tables;
}

double FullBatchErmi(const LinearSoftmaxModel& model,
                     const LabeledDataset& dataset, const WBlock& w) {
  const auto rows = RowsByBlock(dataset, w);
  const std::int64_t n_contrib = CountContributing(rows);
  const std::vector<JointTable> tables = BlockTables(model, dataset, w);
  double sum = 0.0;
  for (std::size_t b = 0; b < tables.size(); ++b) {
    sum += static_cast<double>(rows[b].size()) / static_cast<double>(n_contrib) *
           Ermi(tables[b]);
  }
  return sum;
}

ParamVector PhiGradient(const LinearSoftmaxModel& model,
                        const LabeledDataset& dataset,
                        const FairnessNotion& notion, double lambda) {
  const WBlock w = InitWBlock(dataset, notion);
  CheckCompatible(dataset, model, w);
  return FullBatchDanskin(model, dataset, w, lambda).grad;
}

double PhiGradNorm(const LinearSoftmaxModel& model, const LabeledDataset& dataset,
                   const FairnessNotion& notion, double lambda) {
  return PhiGradient(model, dataset, notion, lambda).norm();
}

TrainResult SgdaTrain(const LabeledDataset& dataset,
                      const LinearSoftmaxModel& model_init,
                      const FairnessNotion& notion, const SolverConfig& config) {
  config.Validate(dataset.size());
  TrainResult result{model_init, InitWBlock(dataset, notion), {}};
  CheckCompatible(dataset, model_init, result.w);
  LinearSoftmaxModel& model = result.model;
  WBlock& w = result.w;
  TrainTrace& trace = result.trace;

  double radius = std::numeric_limits<double>::infinity();
  if (config.project) {
    double min_sensitive = 1.0;
    for (const auto& scale : w.sensitive_scale) {
      for (Eigen::Index r = 0; r < scale.size(); ++r) {
        min_sensitive = std::min(min_sensitive, 1.0 / (scale(r) * scale(r)));
      }
    }
    radius = ProjectionRadius(config.min_class_prob, min_sensitive);
  }
  const double eta_w = config.EffectiveEtaW();

  MinibatchSampler sampler(dataset.size(), config.batch_size, config.one_pass,
                           config.seed);
  std::int64_t horizon = config.iterations;
  if (auto cap = sampler.Capacity()) horizon = std::min(horizon, *cap);
  SplitMix64 iterate_rng = SplitMix64(config.seed).Fork(1);
  trace.random_iterate =
      1 + static_cast<std::int64_t>(iterate_rng.UniformIndex(
              static_cast<std::uint64_t>(horizon)));

  auto probe = [&](TraceRecord& rec) {
    try {
      const FullBatchState state = FullBatchDanskin(model, dataset, w, config.lambda);
      rec.ermi_fullbatch = state.ermi;
      rec.phi_grad_norm = state.grad.norm();
    } catch (const NumericalError&) {
      rec.degenerate = true;
    }
  };

  ParamVector theta = model.Params();
  const int num_params = model.num_params();
  std::vector<std::int64_t> batch;
  std::vector<Eigen::MatrixXd> w_grad(static_cast<std::size_t>(w.num_blocks()));
  trace.records.reserve(static_cast<std::size_t>(horizon + 1));

  std::int64_t t = 0;
  for (; t < horizon; ++t) {
    if (!sampler.Next(batch)) break;
    TraceRecord rec;
    rec.iteration = t;
    if (config.diagnostic_every > 0 && t % config.diagnostic_every == 0) probe(rec);

    ParamVector loss_grad = ParamVector::Zero(num_params);
    ParamVector fair_grad = ParamVector::Zero(num_params);
    for (auto& g : w_grad) g = Eigen::MatrixXd::Zero(dataset.k, dataset.m);
    double loss_sum = 0.0;
    double psi_sum = 0.0;
    std::int64_t observed = 0;
    for (const std::int64_t i : batch) {
      const Eigen::VectorXd x = dataset.features.row(i).transpose();
      const int label = dataset.labels[static_cast<std::size_t>(i)];
      const auto ce = model.CrossEntropy(x, label);
      loss_sum += ce.loss;
      loss_grad += ce.grad;
      const int b = w.BlockForRow(dataset, i);
      if (b < 0) continue;
      const int r = *dataset.sensitive[static_cast<std::size_t>(i)];
      const Eigen::VectorXd f = model.PredictProba(x);
      psi_sum += PsiHat(f, r, b, w);
      fair_grad += GradThetaPsi(model.Jacobian(x), f, r, b, w);
      w_grad[static_cast<std::size_t>(b)] += GradWPsi(f, r, b, w);
      ++observed;
    }
    const auto batch_n = static_cast<double>(batch.size());
    rec.loss = loss_sum / batch_n;

    // theta^{t+1} and W^{t+1} both use gradients at (theta^t, W^t).
    if (observed > 0) {
      const auto obs_n = static_cast<double>(observed);
      rec.psi_avg = psi_sum / obs_n;
      theta -= config.eta_theta *
               (loss_grad / batch_n + config.lambda * fair_grad / obs_n);
      for (int b = 0; b < w.num_blocks(); ++b) {
        auto& mat = w.w[static_cast<std::size_t>(b)];
        mat += (eta_w * config.lambda / obs_n) * w_grad[static_cast<std::size_t>(b)];
        if (config.project) mat = ProjectW(mat, radius);
      }
    } else {
      ++trace.skipped_fairness_batches;
      theta -= config.eta_theta * (loss_grad / batch_n);
    }
    model.SetParams(theta);
    if (t + 1 == trace.random_iterate) trace.random_iterate_params = theta;
    trace.records.push_back(std::move(rec));
  }
  trace.iterations_run = t;
  if (trace.random_iterate > t) {
    // Unreachable for valid configurations; keeps the record well-formed.
    trace.random_iterate = t;
    trace.random_iterate_params = theta;
  }

  TraceRecord final_rec;
  final_rec.iteration = t;
  probe(final_rec);
  trace.records.push_back(final_rec);
  return result;
}

double UnbiasednessAudit(const LabeledDataset& dataset,
                         const LinearSoftmaxModel& model,
                         const FairnessNotion& notion, const WBlock& w,
                         double lambda) {
  dataset.Validate();
  CheckCompatible(dataset, model, w);
  if (w.kind != notion.kind) {
    throw InputError("W block was built for a different fairness notion");
  }
  const auto rows = RowsByBlock(dataset, w);
  const std::int64_t n_contrib = CountContributing(rows);
  if (n_contrib == 0) throw InputError("no contributing rows to audit");
  const auto n = static_cast<double>(dataset.size());
  const int num_params = model.num_params();
  const auto num_blocks = static_cast<std::size_t>(w.num_blocks());
  // A uniformly drawn row i yields loss_i + lambda * (N / n_contrib) * psi_i
  // (psi_i = 0 for non-contributing rows), which is unbiased for the
  // full-batch objective.
  const double fair_weight = n / static_cast<double>(n_contrib);

  // Per-sample route.
  double obj_sum = 0.0;
  ParamVector theta_sum = ParamVector::Zero(num_params);
  std::vector<Eigen::MatrixXd> w_sum(num_blocks,
                                     Eigen::MatrixXd::Zero(dataset.k, dataset.m));
  // Full-batch route: per-block table sums p(l, r) and their theta-derivatives.
  double loss_total = 0.0;
  ParamVector loss_grad_total = ParamVector::Zero(num_params);
  std::vector<Eigen::MatrixXd> table_sum(num_blocks,
                                         Eigen::MatrixXd::Zero(dataset.m, dataset.k));
  std::vector<std::vector<ParamVector>> table_grad(
      num_blocks, std::vector<ParamVector>(
                      static_cast<std::size_t>(dataset.m * dataset.k),
                      ParamVector::Zero(num_params)));

  for (std::int64_t i = 0; i < dataset.size(); ++i) {
    const Eigen::VectorXd x = dataset.features.row(i).transpose();
    const auto ce = model.CrossEntropy(x, dataset.labels[static_cast<std::size_t>(i)]);
    loss_total += ce.loss;
    loss_grad_total += ce.grad;
    const int b = w.BlockForRow(dataset, i);
    if (b < 0) {
      obj_sum += ce.loss;
      theta_sum += ce.grad;
      continue;
    }
    const auto bi = static_cast<std::size_t>(b);
    const int r = *dataset.sensitive[static_cast<std::size_t>(i)];
    const Eigen::VectorXd f = model.PredictProba(x);
    const Eigen::MatrixXd jac = model.Jacobian(x);
    obj_sum += ce.loss + lambda * fair_weight * PsiHat(f, r, b, w);
    theta_sum += ce.grad + lambda * fair_weight * GradThetaPsi(jac, f, r, b, w);
    w_sum[bi] += lambda * fair_weight * GradWPsi(f, r, b, w);
    for (int l = 0; l < dataset.m; ++l) {
      table_sum[bi](l, r) += f(l);
      table_grad[bi][static_cast<std::size_t>(l * dataset.k + r)] +=
          jac.row(l).transpose();
    }
  }

  // Assemble full-batch quantities: the objective is linear in the table
  // entries p(l, r) with coefficient -||W_{.,l}||^2 + 2 scale(r) W(r, l).
  double fair_value = 0.0;
  ParamVector fair_theta = ParamVector::Zero(num_params);
  std::vector<Eigen::MatrixXd> fair_w(num_blocks);
  for (std::size_t b = 0; b < num_blocks; ++b) {
    const double n_b = static_cast<double>(rows[b].size());
    const double weight = n_b / static_cast<double>(n_contrib);
    const Eigen::MatrixXd& mat = w.w[b];
    const Eigen::VectorXd& scale = w.sensitive_scale[b];
    const Eigen::MatrixXd p = table_sum[b] / n_b;
    double value = 0.0;
    ParamVector grad = ParamVector::Zero(num_params);
    Eigen::MatrixXd wgrad = Eigen::MatrixXd::Zero(dataset.k, dataset.m);
    for (int l = 0; l < dataset.m; ++l) {
      const double col_sq = mat.col(l).squaredNorm();
      double p_l = 0.0;
      for (int r = 0; r < dataset.k; ++r) {
        const double coef = -col_sq + 2.0 * scale(r) * mat(r, l);
        value += coef * p(l, r);
        grad += coef * table_grad[b][static_cast<std::size_t>(l * dataset.k + r)] / n_b;
        p_l += p(l, r);
        wgrad(r, l) += 2.0 * scale(r) * p(l, r);
      }
      wgrad.col(l) -= 2.0 * mat.col(l) * p_l;
    }
    fair_value += weight * (value - 1.0);
    fair_theta += weight * grad;
    fair_w[b] = lambda * weight * wgrad;
  }
  const double full_obj = loss_total / n + lambda * fair_value;
  const ParamVector full_theta = loss_grad_total / n + lambda * fair_theta;

  double worst = RelativeDeviation(std::abs(obj_sum / n - full_obj), std::abs(full_obj));
  worst = std::max(worst, RelativeDeviation((theta_sum / n - full_theta).norm(),
                                            full_theta.norm()));
  for (std::size_t b = 0; b < num_blocks; ++b) {
    worst = std::max(worst, RelativeDeviation((w_sum[b] / n - fair_w[b]).norm(),
                                              fair_w[b].norm()));
  }
  return worst;
}

}  // namespace fermi
