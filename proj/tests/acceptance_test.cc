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

// Acceptance suite. Each criterion prints one line:
//   PASS|FAIL <id> <name>: <measurements> [<seconds>s / <budget>s]
// A criterion passes only if its numeric condition holds and it finishes
// within its runtime budget. Exit status is 0 iff every criterion passes.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "fermi/audit.h"
#include "fermi/data.h"
#include "fermi/divergences.h"
#include "fermi/evaluation.h"
#include "fermi/model.h"
#include "fermi/prob_tables.h"
#include "fermi/random.h"
#include "fermi/solver.h"
#include "test_util.h"

namespace fermi {
namespace {

namespace fs = std::filesystem;
using testing::CentralDifference;
using testing::RelativeError;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------------------
// Shared fixtures.

// Gaussian features, uniform labels; the first m * k rows cover every
// (label, sensitive) pair so that every fairness notion has complete blocks.
LabeledDataset SmallFixture(int n, int d, int m, int k, std::uint64_t seed) {
  SplitMix64 rng(seed);
  LabeledDataset ds;
  ds.m = m;
  ds.k = k;
  ds.features.resize(n, d);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < d; ++c) ds.features(i, c) = rng.Normal();
    if (i < m * k) {
      ds.labels.push_back(i % m);
      ds.sensitive.emplace_back(i / m);
    } else {
      ds.labels.push_back(static_cast<int>(rng.UniformIndex(static_cast<std::uint64_t>(m))));
      ds.sensitive.emplace_back(static_cast<int>(rng.UniformIndex(static_cast<std::uint64_t>(k))));
    }
  }
  for (int c = 0; c < d; ++c) ds.feature_names.push_back("x" + std::to_string(c));
  return ds;
}

LinearSoftmaxModel RandomModel(int m, int d, SplitMix64& rng, double sd) {
  LinearSoftmaxModel model(m, d);
  ParamVector theta(model.num_params());
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) = sd * rng.Normal();
  model.SetParams(theta);
  return model;
}

void RandomizeW(WBlock& w, SplitMix64& rng, double sd) {
  for (auto& mat : w.w) {
    for (Eigen::Index i = 0; i < mat.size(); ++i) mat.data()[i] = sd * rng.Normal();
  }
}

// The biased synthetic problem used by the optimization criteria.
SynthConfig BiasedConfig() {
  SynthConfig cfg;
  cfg.n = 2000;
  cfg.d = 5;
  cfg.bias_strength = 2.0;
  cfg.group_balance = 0.3;
  cfg.noise_sd = 1.0;
  cfg.seed = 2026;
  return cfg;
}

// Oracle for the full-batch side of the unbiasedness check: the variational
// objective and its W-gradient evaluated at a soft-prediction table built
// here, independently of the library's table code.
double OracleDeviation(const LabeledDataset& ds, const LinearSoftmaxModel& model,
                       const WBlock& w) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(ds.m, ds.k);
  std::vector<Eigen::VectorXd> f(static_cast<std::size_t>(ds.size()));
  std::int64_t n = 0;
  for (std::int64_t i = 0; i < ds.size(); ++i) {
    if (!ds.sensitive[static_cast<std::size_t>(i)]) continue;
    f[static_cast<std::size_t>(i)] =
        testing::ProbaRef(model.Params(), ds.features.row(i).transpose(), ds.m);
    p.col(*ds.sensitive[static_cast<std::size_t>(i)]) += f[static_cast<std::size_t>(i)];
    ++n;
  }
  p /= static_cast<double>(n);
  const Eigen::VectorXd py = testing::RowSums(p), ps = testing::ColSums(p);
  Eigen::MatrixXd grad_oracle(ds.k, ds.m);
  for (int r = 0; r < ds.k; ++r) {
    for (int l = 0; l < ds.m; ++l) {
      grad_oracle(r, l) = -2.0 * py(l) * w.w[0](r, l) + 2.0 * p(l, r) / std::sqrt(ps(r));
    }
  }
  // The library scales come from label counts; the oracle table uses them too.
  double value = 0.0;
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(ds.k, ds.m);
  for (std::int64_t i = 0; i < ds.size(); ++i) {
    if (!ds.sensitive[static_cast<std::size_t>(i)]) continue;
    const int r = *ds.sensitive[static_cast<std::size_t>(i)];
    value += PsiHat(f[static_cast<std::size_t>(i)], r, 0, w);
    grad += GradWPsi(f[static_cast<std::size_t>(i)], r, 0, w);
  }
  value /= static_cast<double>(n);
  grad /= static_cast<double>(n);
  const double value_oracle = testing::Variational(w.w[0], p);
  return std::max(std::abs(value - value_oracle) / std::max(1.0, std::abs(value_oracle)),
                  RelativeError(testing::Flatten(grad), testing::Flatten(grad_oracle)));
}

// ---------------------------------------------------------------------------
// Criteria.

Outcome Unbiasedness() {
  const LabeledDataset ds = SmallFixture(50, 4, 3, 2, 11);
  SplitMix64 rng(12);
  double worst = 0.0;
  for (const char* name : {"dp", "eodds", "eopp"}) {
    const FairnessNotion notion = ParseFairnessNotion(name, {1, 2});
    for (int rep = 0; rep < 10; ++rep) {
      const LinearSoftmaxModel model = RandomModel(3, 4, rng, 0.3);
      WBlock w = InitWBlock(ds, notion);
      RandomizeW(w, rng, 0.5);
      worst = std::max(worst, UnbiasednessAudit(ds, model, notion, w));
    }
  }
  // Second route for dp: per-sample averages against an oracle table.
  double oracle = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    const LinearSoftmaxModel model = RandomModel(3, 4, rng, 0.3);
    WBlock w = InitWBlock(ds, FairnessNotion{});
    RandomizeW(w, rng, 0.5);
    oracle = std::max(oracle, OracleDeviation(ds, model, w));
  }
  return {worst <= 1e-10 && oracle <= 1e-10,
          "audit deviation=" + Fmt("%.2e", worst) + " oracle deviation=" + Fmt("%.2e", oracle) +
              " (tol 1e-10)"};
}

Outcome VariationalOracle() {
  std::mt19937_64 gen(21);
  double value_err = 0.0, ermi_err = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int m = 2 + t % 4;
    const int k = 2 + (t / 4) % 4;
    const Eigen::MatrixXd p = testing::DirichletTable(m, k, gen);
    const JointTable table(p);
    const Eigen::MatrixXd ascended =
        testing::AscendVariational(p, Eigen::MatrixXd::Zero(k, m), 10000);
    const double v_ascent = testing::Variational(ascended, p);
    const double v_star = VariationalValue(WStar(table), table);
    value_err = std::max(value_err, std::abs(v_ascent - v_star));
    ermi_err = std::max(ermi_err, std::abs(v_ascent - Ermi(table)));
  }
  return {value_err <= 1e-6 && ermi_err <= 1e-6,
          "|V(ascent)-V(W*)|=" + Fmt("%.2e", value_err) + " |V(ascent)-ERMI|=" +
              Fmt("%.2e", ermi_err) + " (tol 1e-6)"};
}

Outcome GradientChecks() {
  SplitMix64 rng(31);
  double e_theta = 0.0, e_w = 0.0, e_jac = 0.0, e_ce = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int m = 2 + t % 3, k = 2 + t % 2, d = 1 + t % 5;
    const LinearSoftmaxModel model = RandomModel(m, d, rng, 0.8);
    Eigen::VectorXd x(d);
    for (int c = 0; c < d; ++c) x(c) = rng.Normal();
    const int label = t % m;
    const int r = t % k;
    WBlock w;
    w.w = {Eigen::MatrixXd::Zero(k, m)};
    w.sensitive_scale = {Eigen::VectorXd::Constant(k, 1.0) + Eigen::VectorXd::LinSpaced(k, 0, 1)};
    RandomizeW(w, rng, 0.7);
    const ParamVector theta = model.Params();
    auto at = [&](const Eigen::VectorXd& th) {
      LinearSoftmaxModel probe(m, d);
      probe.SetParams(th);
      return probe;
    };

    const Eigen::VectorXd f = model.PredictProba(x);
    const Eigen::MatrixXd jac = model.Jacobian(x);
    e_theta = std::max(
        e_theta, RelativeError(GradThetaPsi(jac, f, r, 0, w),
                               CentralDifference(
                                   [&](const Eigen::VectorXd& th) {
                                     return PsiHat(at(th).PredictProba(x), r, 0, w);
                                   },
                                   theta)));
    e_w = std::max(
        e_w, RelativeError(testing::Flatten(GradWPsi(f, r, 0, w)),
                           CentralDifference(
                               [&](const Eigen::VectorXd& flat) {
                                 WBlock probe = w;
                                 probe.w[0] = Eigen::Map<const Eigen::MatrixXd>(flat.data(), k, m);
                                 return PsiHat(f, r, 0, probe);
                               },
                               testing::Flatten(w.w[0]))));
    Eigen::MatrixXd numeric_jac(m, model.num_params());
    for (int j = 0; j < m; ++j) {
      numeric_jac.row(j) = CentralDifference(
                               [&](const Eigen::VectorXd& th) { return at(th).PredictProba(x)(j); },
                               theta)
                               .transpose();
    }
    e_jac = std::max(e_jac, RelativeError(testing::Flatten(jac), testing::Flatten(numeric_jac)));
    e_ce = std::max(e_ce, RelativeError(model.CrossEntropy(x, label).grad,
                                        CentralDifference(
                                            [&](const Eigen::VectorXd& th) {
                                              return at(th).CrossEntropy(x, label).loss;
                                            },
                                            theta)));
  }
  const double worst = std::max({e_theta, e_w, e_jac, e_ce});
  return {worst <= 1e-5, "theta-psi=" + Fmt("%.1e", e_theta) + " W-psi=" + Fmt("%.1e", e_w) +
                             " jacobian=" + Fmt("%.1e", e_jac) + " cross-entropy=" +
                             Fmt("%.1e", e_ce) + " (tol 1e-5)"};
}

Outcome BoundChain() {
  std::mt19937_64 gen(41);
  std::uniform_int_distribution<int> dim(2, 6);
  constexpr double kTol = 1e-9;
  double worst = 0.0;  // largest violation of any link in the chain
  auto le = [&](double a, double b) { worst = std::max(worst, a - b); };
  auto eq = [&](double a, double b) { worst = std::max(worst, std::abs(a - b)); };
  for (int t = 0; t < 1000; ++t) {
    const int m = t < 200 ? 2 : dim(gen);
    const int k = t < 100 ? 2 : dim(gen);
    const Eigen::MatrixXd p = testing::DirichletTable(m, k, gen, t % 2 == 0 ? 1.0 : 0.3);
    const JointTable table(p);
    const double d = Ermi(table);
    const double i1 = ShannonMi(table), i2 = RenyiMi2(table);
    le(0.0, i1);
    le(i1, i2);
    eq(i2, std::log1p(d));
    le(i2, d);
    const double linf = LqViolation(table, kInfinityNorm);
    const double l2 = LqViolation(table, 2.0), l1 = LqViolation(table, 1.0);
    le(linf, l2);
    le(l2, l1);
    le(l1, std::sqrt(d));
    const PMatrix pm = ComputePMatrix(table);
    const double lambda2 = pm.SecondEigenvalue();
    le(lambda2, d);
    eq(pm.entries.trace() - 1.0, d);
    if (std::min(m, k) == 2) eq(lambda2, d);
    if (m == 2 && k == 2) {
      const double pearson = Pearson(table);
      le(pearson * pearson, lambda2);
    }
    const double ps_min = testing::ColSums(p).minCoeff();
    le(DpConditionalLinf(table), std::sqrt(d) / ps_min);
    // Independent routes for the two spectral quantities.
    eq(d, testing::ChiSquared(p));
    eq(lambda2, testing::MaximalCorrelationSquared(p));
  }
  return {worst <= kTol, "max violation=" + Fmt("%.2e", worst) + " over 1000 tables (tol 1e-9)"};
}

Outcome WorkedTable() {
  const JointTable table((Eigen::Matrix2d() << 0.4, 0.1, 0.1, 0.4).finished());
  // The mutual information in closed form; 0.192745 is its 6-digit rounding.
  const double i1_exact = 0.8 * std::log(1.6) + 0.2 * std::log(0.4);
  const double errs[] = {
      std::abs(Ermi(table) - 0.36),
      std::abs(ShannonMi(table) - i1_exact),
      std::abs(LqViolation(table, 1.0) - 0.6),
      std::abs(DpConditionalLinf(table) - 0.3),
      std::abs(ComputePMatrix(table).SecondEigenvalue() - 0.36),
  };
  const double worst = *std::max_element(std::begin(errs), std::end(errs));
  const bool rounded = std::abs(ShannonMi(table) - 0.192745) <= 5e-7;
  return {worst <= 1e-9 && rounded,
          "max error=" + Fmt("%.2e", worst) + " I1=" + Fmt("%.9f", ShannonMi(table)) +
              " (tol 1e-9; I1 rounds to 0.192745)"};
}

double StationarityRatio(const LabeledDataset& ds, int batch, std::int64_t iters,
                         double eta_theta, double eta_w) {
  SolverConfig c;
  c.lambda = 10.0;
  c.batch_size = batch;
  c.iterations = iters;
  c.eta_theta = eta_theta;
  c.eta_w = eta_w;
  c.seed = 1;
  c.diagnostic_every = 100;
  const TrainResult r = SgdaTrain(ds, LinearSoftmaxModel(ds.m, ds.d()), FairnessNotion{}, c);
  std::vector<double> probes;
  for (const auto& rec : r.trace.records) {
    if (rec.phi_grad_norm) probes.push_back(*rec.phi_grad_norm);
  }
  if (probes.size() < 6) return std::numeric_limits<double>::infinity();
  double tail = 0.0;
  for (std::size_t i = probes.size() - 5; i < probes.size(); ++i) tail += probes[i];
  return tail / 5.0 / probes.front();
}

Outcome Stationarity() {
  const LabeledDataset ds = SynthesizeBiased(BiasedConfig());
  const double r4 = StationarityRatio(ds, 4, 20000, 0.0004, 0.0005);
  const double r1 = StationarityRatio(ds, 1, 50000, 0.0002, 0.0002);
  return {r4 < 0.05 && r1 < 0.05, "probe ratio batch4=" + Fmt("%.4f", r4) +
                                      " batch1=" + Fmt("%.4f", r1) + " (need < 0.05)"};
}

SolverConfig TradeoffConfig(double lambda, std::uint64_t seed) {
  SolverConfig c;
  c.lambda = lambda;
  c.batch_size = 4;
  c.iterations = 20000;
  c.eta_theta = 0.0005;
  c.eta_w = 0.0001;
  c.seed = seed;
  c.diagnostic_every = 0;
  return c;
}

// Accuracy of the baseline curve at the given dp, by linear interpolation
// between grid points sorted by dp.
double BaselineAccuracyAt(const std::vector<BaselinePoint>& curve, double dp) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& pt : curve) pts.emplace_back(pt.report.dp_linf, pt.report.accuracy);
  std::sort(pts.begin(), pts.end());
  if (dp <= pts.front().first) return pts.front().second;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const auto [d0, a0] = pts[i - 1];
    const auto [d1, a1] = pts[i];
    if (dp <= d1) return d1 == d0 ? std::max(a0, a1) : a0 + (a1 - a0) * (dp - d0) / (d1 - d0);
  }
  return pts.back().second;
}

Outcome Tradeoff() {
  const LabeledDataset ds = SynthesizeBiased(BiasedConfig());
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(0.05 * i);
  std::vector<double> ratio, over_majority, over_baseline;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto [train, test] = Split(ds, 0.3, seed);
    const FairnessNotion dp;
    const TrainResult base = SgdaTrain(train, LinearSoftmaxModel(2, 5), dp, TradeoffConfig(0, seed));
    const TrainResult fair =
        SgdaTrain(train, LinearSoftmaxModel(2, 5), dp, TradeoffConfig(100, seed));
    const FairnessReport r0 = Evaluate(base.model, test, dp);
    const FairnessReport r100 = Evaluate(fair.model, test, dp);
    const auto curve = NaiveBaselineCurve(base.model, MajorityLabel(train), test, dp, grid);
    ratio.push_back(r100.dp_linf / r0.dp_linf);
    over_majority.push_back(r100.accuracy - curve.back().report.accuracy);
    over_baseline.push_back(r100.accuracy - BaselineAccuracyAt(curve, r100.dp_linf));
  }
  const double mr = Median(ratio), mm = Median(over_majority), mb = Median(over_baseline);
  return {mr <= 0.25 && mm >= 0.0 && mb > 0.0,
          "median dp ratio=" + Fmt("%.3f", mr) + " (<= 0.25), acc-majority=" + Fmt("%+.4f", mm) +
              " (>= 0), acc-baseline@dp=" + Fmt("%+.4f", mb) + " (> 0)"};
}

// ERMI of the soft-prediction table of `model` on `ds`.
double SampleErmi(const LinearSoftmaxModel& model, const LabeledDataset& ds) {
  std::vector<int> s(ds.sensitive.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = *ds.sensitive[i];
  return Ermi(EmpiricalJoint(model.PredictProbaBatch(ds.features), OneHot(s, ds.k)));
}

Outcome Consistency() {
  // A fixed predictor that leans on the shifted coordinate.
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(2, 5);
  w.row(1) << 0.4, 0.4, 0.4, 0.4, 1.2;
  const LinearSoftmaxModel model(w, Eigen::Vector2d(0.0, -0.5));

  SynthConfig pop = BiasedConfig();
  pop.seed = 900001;
  pop.n = 10'000'000;
  SyntheticStream stream(pop);
  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(2, 2);
  Eigen::VectorXd x;
  int y = 0, s = 0;
  for (std::int64_t i = 0; i < pop.n; ++i) {
    stream.Next(x, y, s);
    table.col(s) += model.PredictProba(x);
  }
  table /= static_cast<double>(pop.n);
  const double population = Ermi(JointTable(table));

  double err_small = 0.0, err_large = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SynthConfig cfg = BiasedConfig();
    cfg.seed = 5000 + seed;
    cfg.n = 1000;
    err_small += std::abs(SampleErmi(model, SynthesizeBiased(cfg)) - population);
    cfg.seed = 7000 + seed;
    cfg.n = 100000;
    err_large += std::abs(SampleErmi(model, SynthesizeBiased(cfg)) - population);
  }
  err_small /= 20.0;
  err_large /= 20.0;
  return {err_large <= 0.01 && err_large <= err_small,
          "population ERMI=" + Fmt("%.5f", population) + " mean error n=1e3: " +
              Fmt("%.5f", err_small) + " n=1e5: " + Fmt("%.5f", err_large) + " (<= 0.01)"};
}

Outcome Masking() {
  const LabeledDataset ds = SynthesizeBiased(BiasedConfig());
  std::vector<double> ratio;
  double audit = 0.0;
  SplitMix64 rng(91);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto [train_full, test] = Split(ds, 0.3, seed);
    const LabeledDataset train = MaskSensitive(train_full, 0.9, seed);
    const FairnessNotion dp;
    const TrainResult base = SgdaTrain(train, LinearSoftmaxModel(2, 5), dp, TradeoffConfig(0, seed));
    const TrainResult fair =
        SgdaTrain(train, LinearSoftmaxModel(2, 5), dp, TradeoffConfig(100, seed));
    ratio.push_back(Evaluate(fair.model, test, dp).dp_linf / Evaluate(base.model, test, dp).dp_linf);

    WBlock w = InitWBlock(train, dp);
    RandomizeW(w, rng, 0.5);
    const LinearSoftmaxModel probe = RandomModel(2, 5, rng, 0.3);
    audit = std::max({audit, UnbiasednessAudit(train, probe, dp, w),
                      OracleDeviation(train, probe, w)});
  }
  const double mr = Median(ratio);
  return {mr <= 0.5 && audit <= 1e-10, "median dp ratio=" + Fmt("%.3f", mr) +
                                           " (<= 0.5), masked audit deviation=" +
                                           Fmt("%.2e", audit) + " (<= 1e-10)"};
}

int RunCli(const std::string& args) {
#ifdef FERMI_CLI_PATH
  const std::string cmd = std::string(FERMI_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
#else
  (void)args;
  return -1;
#endif
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome CliDeterminism() {
  const fs::path dir =
      fs::temp_directory_path() / ("fermi_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  std::vector<std::string> models, reports;
  bool ok = true;
  for (int run = 0; run < 2; ++run) {
    const fs::path sub = dir / std::to_string(run);
    fs::create_directories(sub);
    const std::string data = (sub / "data.csv").string();
    const std::string model = (sub / "model.json").string();
    const std::string report = (sub / "report.json").string();
    ok = ok && RunCli("synth --n 2000 --d 5 --bias 2 --balance 0.3 --noise 1 --seed 7 --out " +
                      data) == 0;
    ok = ok && RunCli("train --data " + data +
                      " --fairness dp --lambda 10 --batch-size 4 --iters 5000"
                      " --lr-theta 0.0005 --lr-w 0.0005 --seed 3 --out " + model) == 0;
    ok = ok && RunCli("eval --model " + model + " --data " + data + " --fairness dp --report " +
                      report) == 0;
    models.push_back(Slurp(model));
    reports.push_back(Slurp(report));
  }
  const int audit = RunCli("audit --data " + (dir / "0" / "data.csv").string() +
                           " --fairness dp --seed 0");
  fs::remove_all(dir);
  const bool same = !models[0].empty() && models[0] == models[1] && !reports[0].empty() &&
                    reports[0] == reports[1];
  return {ok && same && audit == 0,
          std::string("pipeline ") + (ok ? "ok" : "failed") + ", model/report bytes " +
              (same ? "identical" : "differ") + ", audit exit=" + std::to_string(audit)};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace fermi

int main() {
  using fermi::Criterion;
  const std::vector<Criterion> criteria = {
      {1, "unbiasedness", 1, fermi::Unbiasedness},
      {2, "variational_oracle", 30, fermi::VariationalOracle},
      {3, "gradient_checks", 10, fermi::GradientChecks},
      {4, "bound_chain", 30, fermi::BoundChain},
      {5, "worked_table", 1, fermi::WorkedTable},
      {6, "stationarity", 120, fermi::Stationarity},
      {7, "tradeoff", 180, fermi::Tradeoff},
      {8, "consistency", 60, fermi::Consistency},
      {9, "masking", 120, fermi::Masking},
      {10, "cli_determinism", 60, fermi::CliDeterminism},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    fermi::Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = out.pass && in_time;
    failures += pass ? 0 : 1;
    std::printf("%s %2d %s: %s [%.2fs / %.0fs%s]\n", pass ? "PASS" : "FAIL", c.id, c.name,
                out.detail.c_str(), secs, c.budget_s, in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
