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

#include "fermi/audit.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "fermi/divergences.h"
#include "fermi/errors.h"
#include "fermi/model.h"
#include "fermi/prob_tables.h"
#include "fermi/random.h"

namespace fermi {
namespace {

constexpr double kUnbiasedTolerance = 1e-10;
constexpr double kGradientTolerance = 1e-5;
constexpr double kBoundTolerance = 1e-9;
constexpr double kWStarTolerance = 1e-10;
constexpr int kGradientPoints = 20;
constexpr int kRandomTables = 1000;
constexpr std::int64_t kDanskinRows = 200;

double NormRelError(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric) {
  const double scale = std::max({analytic.norm(), numeric.norm(), 1e-12});
  return (analytic - numeric).norm() / scale;
}

// Central differences of a scalar function of a parameter vector.
Eigen::VectorXd CentralDiff(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& at) {
  Eigen::VectorXd out(at.size());
  Eigen::VectorXd probe = at;
  for (Eigen::Index i = 0; i < at.size(); ++i) {
    probe(i) = at(i) + kFiniteDiffStep;
    const double up = f(probe);
    probe(i) = at(i) - kFiniteDiffStep;
    const double down = f(probe);
    probe(i) = at(i);
    out(i) = (up - down) / (2.0 * kFiniteDiffStep);
  }
  return out;
}

LinearSoftmaxModel RandomModel(int m, int d, double sd, SplitMix64& rng) {
  LinearSoftmaxModel model(m, d);
  ParamVector theta(model.num_params());
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) = sd * rng.Normal();
  model.SetParams(theta);
  return model;
}

void Randomize(WBlock& w, SplitMix64& rng) {
  for (auto& block : w.w) {
    for (Eigen::Index i = 0; i < block.size(); ++i) block.data()[i] = 0.5 * rng.Normal();
  }
}

// Flat Dirichlet draw via normalized exponentials.
JointTable RandomTable(int m, int k, SplitMix64& rng) {
  Eigen::MatrixXd p(m, k);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    p.data()[i] = -std::log1p(-rng.Uniform()) + 1e-12;
  }
  p /= p.sum();
  return JointTable(p);
}

// Largest violation of the ordering between dependence measures.
double BoundChainViolation(const JointTable& table) {
  const DivergenceReport r = ComputeDivergences(table);
  const double d = r.ermi;
  const double l2 = LqViolation(table, 2.0);
  const PMatrix p = ComputePMatrix(table);
  const double lambda2 = p.eigenvalues.size() > 1 ? p.SecondEigenvalue() : 0.0;
  const Marginals mg = ComputeMarginals(table);

  double worst = 0.0;
  auto le = [&](double a, double b) { worst = std::max(worst, a - b); };
  auto eq = [&](double a, double b) { worst = std::max(worst, std::abs(a - b)); };
  le(0.0, r.shannon_mi);
  le(r.shannon_mi, r.renyi_mi_2);
  eq(r.renyi_mi_2, std::log1p(d));
  le(r.renyi_mi_2, d);
  le(r.linf_violation, l2);
  le(l2, r.l1_violation);
  le(r.l1_violation, std::sqrt(d));
  le(lambda2, d);
  if (std::min(table.m(), table.k()) == 2) eq(lambda2, d);
  if (r.pearson) le(*r.pearson * *r.pearson, lambda2);
  eq(p.entries.trace() - 1.0, d);
  le(r.dp_conditional_linf, std::sqrt(d) / mg.p_s.minCoeff());
  return worst;
}

std::vector<std::int64_t> ContributingRows(const LabeledDataset& dataset,
                                           const WBlock& w) {
  std::vector<std::int64_t> out;
  for (std::int64_t i = 0; i < dataset.size(); ++i) {
    if (w.BlockForRow(dataset, i) >= 0) out.push_back(i);
  }
  return out;
}

AuditCheck Make(std::string name, double value, double tolerance) {
  return {std::move(name), value <= tolerance, value, tolerance};
}

}  // namespace

bool AuditReport::AllPassed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const AuditCheck& c) { return c.pass; });
}

AuditReport RunAudit(const LabeledDataset& dataset, const FairnessNotion& notion,
                     std::uint64_t seed) {
  dataset.Validate();
  notion.Validate(dataset.m);
  const WBlock base = InitWBlock(dataset, notion);
  const std::vector<std::int64_t> contributing = ContributingRows(dataset, base);
  if (contributing.empty()) throw InputError("no row contributes to the fairness term");
  SplitMix64 rng(seed);
  const int m = dataset.m;
  const int d = dataset.d();
  AuditReport report;

  {
    WBlock w = base;
    Randomize(w, rng);
    const LinearSoftmaxModel model = RandomModel(m, d, 0.3, rng);
    report.checks.push_back(Make("unbiasedness",
                                 UnbiasednessAudit(dataset, model, notion, w, 1.0),
                                 kUnbiasedTolerance));
  }

  double worst_ce = 0.0, worst_theta = 0.0, worst_w = 0.0;
  for (int point = 0; point < kGradientPoints; ++point) {
    LinearSoftmaxModel model = RandomModel(m, d, 0.5, rng);
    WBlock w = base;
    Randomize(w, rng);
    const std::int64_t any = static_cast<std::int64_t>(
        rng.UniformIndex(static_cast<std::uint64_t>(dataset.size())));
    const Eigen::VectorXd x_any = dataset.features.row(any).transpose();
    worst_ce = std::max(worst_ce,
                        FiniteDiffCheck(model, x_any, dataset.labels[static_cast<std::size_t>(any)],
                                        kGradientTolerance)
                            .max_rel_error);

    const std::int64_t i = contributing[rng.UniformIndex(contributing.size())];
    const Eigen::VectorXd x = dataset.features.row(i).transpose();
    const int r = *dataset.sensitive[static_cast<std::size_t>(i)];
    const int b = w.BlockForRow(dataset, i);
    const Eigen::VectorXd f = model.PredictProba(x);

    const ParamVector theta = model.Params();
    const ParamVector analytic_theta = GradThetaPsi(model.Jacobian(x), f, r, b, w);
    LinearSoftmaxModel scratch = model;
    const Eigen::VectorXd numeric_theta = CentralDiff(
        [&](const Eigen::VectorXd& t) {
          scratch.SetParams(t);
          return PsiHat(scratch.PredictProba(x), r, b, w);
        },
        theta);
    worst_theta = std::max(worst_theta, NormRelError(analytic_theta, numeric_theta));

    const Eigen::MatrixXd analytic_w = GradWPsi(f, r, b, w);
    const Eigen::MatrixXd w0 = w.w[static_cast<std::size_t>(b)];
    WBlock w_scratch = w;
    const Eigen::VectorXd numeric_w = CentralDiff(
        [&](const Eigen::VectorXd& flat) {
          w_scratch.w[static_cast<std::size_t>(b)] =
              Eigen::Map<const Eigen::MatrixXd>(flat.data(), w0.rows(), w0.cols());
          return PsiHat(f, r, b, w_scratch);
        },
        Eigen::Map<const Eigen::VectorXd>(w0.data(), w0.size()));
    worst_w = std::max(
        worst_w, NormRelError(Eigen::Map<const Eigen::VectorXd>(analytic_w.data(),
                                                                analytic_w.size()),
                              numeric_w));
  }
  report.checks.push_back(Make("grad_cross_entropy", worst_ce, kGradientTolerance));
  report.checks.push_back(Make("grad_theta_psi", worst_theta, kGradientTolerance));
  report.checks.push_back(Make("grad_w_psi", worst_w, kGradientTolerance));

  {
    // Danskin: the gradient through W* is the gradient of the max-out value.
    LabeledDataset sub = dataset;
    if (dataset.size() > kDanskinRows) {
      std::vector<std::int64_t> order(static_cast<std::size_t>(dataset.size()));
      std::iota(order.begin(), order.end(), 0);
      SplitMix64 shuffle_rng = rng.Fork(7);
      Shuffle(std::span<std::int64_t>(order), shuffle_rng);
      order.resize(static_cast<std::size_t>(kDanskinRows));
      std::sort(order.begin(), order.end());
      sub = dataset.Subset(order);
      try {
        InitWBlock(sub, notion);
      } catch (const InputError&) {
        sub = dataset;
      }
    }
    const WBlock w = InitWBlock(sub, notion);
    LinearSoftmaxModel model = RandomModel(m, d, 0.3, rng);
    const double lambda = 1.0;
    auto phi = [&](const Eigen::VectorXd& t) {
      model.SetParams(t);
      double loss = 0.0;
      for (std::int64_t i = 0; i < sub.size(); ++i) {
        loss += model.CrossEntropy(sub.features.row(i).transpose(),
                                   sub.labels[static_cast<std::size_t>(i)])
                    .loss;
      }
      return loss / static_cast<double>(sub.size()) +
             lambda * FullBatchErmi(model, sub, w);
    };
    const ParamVector theta = model.Params();
    const Eigen::VectorXd numeric = CentralDiff(phi, theta);
    model.SetParams(theta);
    const ParamVector analytic = PhiGradient(model, sub, notion, lambda);
    report.checks.push_back(
        Make("danskin_gradient", NormRelError(analytic, numeric), kGradientTolerance));
  }

  {
    double worst = 0.0;
    const LinearSoftmaxModel model = RandomModel(m, d, 0.5, rng);
    std::vector<JointTable> tables = BlockTables(model, dataset, base);
    for (int t = 0; t < 100; ++t) {
      tables.push_back(RandomTable(2 + static_cast<int>(rng.UniformIndex(5)),
                                   2 + static_cast<int>(rng.UniformIndex(5)), rng));
    }
    for (const JointTable& table : tables) {
      worst = std::max(worst, std::abs(VariationalValue(WStar(table), table) - Ermi(table)));
    }
    report.checks.push_back(Make("w_star_value", worst, kWStarTolerance));
  }

  {
    double worst = 0.0;
    const LinearSoftmaxModel model = RandomModel(m, d, 0.5, rng);
    for (const JointTable& table : BlockTables(model, dataset, base)) {
      worst = std::max(worst, BoundChainViolation(table));
    }
    for (int t = 0; t < kRandomTables; ++t) {
      worst = std::max(worst, BoundChainViolation(RandomTable(
                                  2 + static_cast<int>(rng.UniformIndex(5)),
                                  2 + static_cast<int>(rng.UniformIndex(5)), rng)));
    }
    report.checks.push_back(Make("bound_chain", worst, kBoundTolerance));
  }
  return report;
}

}  // namespace fermi
