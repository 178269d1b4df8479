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

// Command-line front end: synth, train, eval, sweep, mask and audit.
//
// Exit codes: 0 success, 2 input or schema error, 3 numerical assumption
// violated, 4 internal assertion (including a failed audit).

#include <charconv>
#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fermi/audit.h"
#include "fermi/data.h"
#include "fermi/errors.h"
#include "fermi/evaluation.h"
#include "fermi/model.h"
#include "fermi/solver.h"

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitInternal = 4;

std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = text.find(',', start);
    out.push_back(text.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T ParseNumber(const std::string& token, const char* what) {
  T value{};
  const char* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end || token.empty()) {
    throw fermi::InputError(std::string("bad ") + what + ": '" + token + "'");
  }
  return value;
}

std::optional<int> ParseBatch(const std::string& token) {
  if (token == "full") return std::nullopt;
  const int b = ParseNumber<int>(token, "batch size");
  if (b < 1) throw fermi::InputError("batch size must be positive or 'full'");
  return b;
}

std::vector<int> ParseIntList(const std::string& text, const char* what) {
  std::vector<int> out;
  if (text.empty()) return out;
  for (const auto& t : SplitList(text)) out.push_back(ParseNumber<int>(t, what));
  return out;
}

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw fermi::InputError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw fermi::InputError("write to " + path + " failed");
}

template <typename Fn>
void WriteStream(const std::string& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw fermi::InputError("cannot open " + path + " for writing");
  fn(out);
  if (!out) throw fermi::InputError("write to " + path + " failed");
}

struct SolverFlags {
  double lambda = 0.0;
  std::string batch = "1";
  std::int64_t iters = 1000;
  double lr_theta = 0.005;
  double lr_w = 0.05;
  std::uint64_t seed = 0;
  bool project = false;
  double min_class_prob = 1e-3;
  bool one_pass = false;
  std::int64_t probe_every = 100;

  fermi::SolverConfig Config() const {
    fermi::SolverConfig c;
    c.lambda = lambda;
    c.batch_size = ParseBatch(batch);
    c.iterations = iters;
    c.eta_theta = lr_theta;
    c.eta_w = lr_w;
    c.seed = seed;
    c.project = project;
    c.min_class_prob = min_class_prob;
    c.one_pass = one_pass;
    c.diagnostic_every = probe_every;
    return c;
  }
};

void AddStepFlags(CLI::App* cmd, SolverFlags& f) {
  cmd->add_option("--iters", f.iters, "SGDA iterations")->check(CLI::PositiveNumber);
  cmd->add_option("--lr-theta", f.lr_theta, "descent step size");
  cmd->add_option("--lr-w", f.lr_w, "ascent step size (capped at 1/(2 lambda))");
  cmd->add_flag("--project", f.project, "project W onto its bounded ball");
  cmd->add_option("--min-class-prob", f.min_class_prob,
                  "assumed lower bound on predicted class probabilities");
  cmd->add_flag("--one-pass", f.one_pass, "sample without replacement, one epoch");
  cmd->add_option("--probe-every", f.probe_every,
                  "full-batch diagnostics interval (0: final only)");
}

fermi::FairnessNotion Notion(const std::string& name, const std::string& adv) {
  std::vector<int> set = ParseIntList(adv, "advantaged class");
  if (name == "eopp" && set.empty()) set = fermi::DefaultAdvantagedSet();
  return fermi::ParseFairnessNotion(name, std::move(set));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FERMI: fair empirical risk minimization via exponential Renyi "
               "mutual information"};
  app.require_subcommand(1);

  // synth
  fermi::SynthConfig synth;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "write a biased synthetic dataset");
  synth_cmd->add_option("--n", synth.n, "rows")->required();
  synth_cmd->add_option("--d", synth.d, "features")->required();
  synth_cmd->add_option("--bias", synth.bias_strength, "bias strength")->required();
  synth_cmd->add_option("--balance", synth.group_balance, "P(s = 1)")->required();
  synth_cmd->add_option("--noise", synth.noise_sd, "label noise sd")->required();
  synth_cmd->add_option("--seed", synth.seed, "seed")->required();
  synth_cmd->add_option("--out", synth_out, "output CSV")->required();

  // train
  std::string data_path, fairness = "dp", advantaged, model_out, trace_out;
  SolverFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "fit a fair classifier with SGDA");
  train_cmd->add_option("--data", data_path, "training CSV")->required();
  train_cmd->add_option("--fairness", fairness, "dp, eodds or eopp")->required();
  train_cmd->add_option("--advantaged", advantaged, "comma-separated classes (eopp)");
  train_cmd->add_option("--lambda", train_flags.lambda, "fairness weight")->required();
  train_cmd->add_option("--batch-size", train_flags.batch, "INT or full")->required();
  train_cmd->add_option("--seed", train_flags.seed, "seed")->required();
  AddStepFlags(train_cmd, train_flags);
  train_cmd->add_option("--trace", trace_out, "per-iteration CSV trace");
  train_cmd->add_option("--out", model_out, "output model JSON")->required();

  // eval
  std::string model_path, report_out;
  auto* eval_cmd = app.add_subcommand("eval", "accuracy and fairness of a model");
  eval_cmd->add_option("--model", model_path, "model JSON")->required();
  eval_cmd->add_option("--data", data_path, "test CSV")->required();
  eval_cmd->add_option("--fairness", fairness, "dp, eodds or eopp")->required();
  eval_cmd->add_option("--advantaged", advantaged, "comma-separated classes (eopp)");
  eval_cmd->add_option("--report", report_out, "output report JSON")->required();

  // sweep
  std::string lambdas, batch_sizes, seeds, curve_out, baseline_out;
  SolverFlags sweep_flags;
  fermi::SweepOptions sweep_opts;
  auto* sweep_cmd = app.add_subcommand("sweep", "accuracy/fairness tradeoff curve");
  sweep_cmd->add_option("--data", data_path, "CSV")->required();
  sweep_cmd->add_option("--fairness", fairness, "dp, eodds or eopp")->required();
  sweep_cmd->add_option("--advantaged", advantaged, "comma-separated classes (eopp)");
  sweep_cmd->add_option("--lambdas", lambdas, "comma-separated")->required();
  sweep_cmd->add_option("--batch-sizes", batch_sizes, "comma-separated, INT or full")
      ->required();
  sweep_cmd->add_option("--seeds", seeds, "comma-separated")->required();
  sweep_cmd->add_option("--test-fraction", sweep_opts.test_fraction, "held-out share")
      ->required();
  sweep_cmd->add_option("--split-seed", sweep_opts.split_seed, "train/test split seed");
  sweep_cmd->add_option("--mask-fraction", sweep_opts.train_mask_fraction,
                        "share of training rows with masked sensitive attribute");
  sweep_cmd->add_option("--mask-seed", sweep_opts.mask_seed, "masking seed");
  sweep_cmd->add_option("--jobs", sweep_opts.jobs, "worker threads")
      ->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--baseline-out", baseline_out,
                        "also write the naive mixing baseline curve");
  AddStepFlags(sweep_cmd, sweep_flags);
  sweep_cmd->add_option("--out", curve_out, "output CSV")->required();

  // mask
  double mask_fraction = 0.0;
  std::uint64_t mask_seed = 0;
  std::string mask_out;
  auto* mask_cmd = app.add_subcommand("mask", "hide a share of sensitive attributes");
  mask_cmd->add_option("--data", data_path, "CSV")->required();
  mask_cmd->add_option("--fraction", mask_fraction, "share to mask")->required();
  mask_cmd->add_option("--seed", mask_seed, "seed")->required();
  mask_cmd->add_option("--out", mask_out, "output CSV")->required();

  // audit
  std::uint64_t audit_seed = 0;
  auto* audit_cmd = app.add_subcommand("audit", "estimator self-checks on a dataset");
  audit_cmd->add_option("--data", data_path, "CSV")->required();
  audit_cmd->add_option("--fairness", fairness, "dp, eodds or eopp")->required();
  audit_cmd->add_option("--advantaged", advantaged, "comma-separated classes (eopp)");
  audit_cmd->add_option("--seed", audit_seed, "seed")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*synth_cmd) {
      fermi::SaveCsv(fermi::SynthesizeBiased(synth), synth_out);
    } else if (*train_cmd) {
      const fermi::LabeledDataset data = fermi::LoadCsv(data_path);
      const fermi::FairnessNotion notion = Notion(fairness, advantaged);
      const fermi::SolverConfig config = train_flags.Config();
      const fermi::TrainResult result =
          fermi::SgdaTrain(data, fermi::LinearSoftmaxModel(data.m, data.d()), notion, config);
      fermi::ModelDocument doc;
      doc.model = result.model;
      doc.k = data.k;
      doc.fairness_notion = notion.Name();
      doc.seed = config.seed;
      doc.lambda = config.lambda;
      doc.iterations = result.trace.iterations_run;
      fermi::SaveModel(doc, model_out);
      if (!trace_out.empty()) {
        WriteStream(trace_out, [&](std::ostream& os) { fermi::WriteTraceCsv(result.trace, os); });
      }
      if (result.trace.skipped_fairness_batches > 0) {
        std::cerr << "note: " << result.trace.skipped_fairness_batches
                  << " minibatches had no contributing rows\n";
      }
    } else if (*eval_cmd) {
      const fermi::ModelDocument doc = fermi::LoadModel(model_path);
      const fermi::LabeledDataset data = fermi::LoadCsv(data_path);
      if (doc.model.feature_dim() != data.d()) {
        throw fermi::InputError("model expects " + std::to_string(doc.model.feature_dim()) +
                                " features, data has " + std::to_string(data.d()));
      }
      if (data.m > doc.model.num_classes()) {
        throw fermi::InputError("data has labels beyond the model's classes");
      }
      fermi::LabeledDataset aligned = data;
      aligned.m = doc.model.num_classes();
      const fermi::FairnessReport report =
          fermi::Evaluate(doc.model, aligned, Notion(fairness, advantaged));
      WriteText(report_out, fermi::ReportToJson(report));
    } else if (*sweep_cmd) {
      const fermi::LabeledDataset data = fermi::LoadCsv(data_path);
      const fermi::FairnessNotion notion = Notion(fairness, advantaged);
      std::vector<double> lambda_list;
      for (const auto& t : SplitList(lambdas)) lambda_list.push_back(ParseNumber<double>(t, "lambda"));
      std::vector<std::optional<int>> batch_list;
      for (const auto& t : SplitList(batch_sizes)) batch_list.push_back(ParseBatch(t));
      std::vector<std::uint64_t> seed_list;
      for (const auto& t : SplitList(seeds)) seed_list.push_back(ParseNumber<std::uint64_t>(t, "seed"));
      sweep_opts.solver = sweep_flags.Config();
      const fermi::SweepResult result =
          fermi::Sweep(data, notion, lambda_list, batch_list, seed_list, sweep_opts);
      WriteStream(curve_out, [&](std::ostream& os) { fermi::WriteCurveCsv(result, os); });
      int failures = 0;
      for (const auto& row : result.rows) {
        if (!row.error.empty()) {
          ++failures;
          std::cerr << "lambda=" << row.lambda << " seed=" << row.seed << ": " << row.error
                    << '\n';
        }
      }
      if (!baseline_out.empty()) {
        auto [train, test] = fermi::Split(data, sweep_opts.test_fraction, sweep_opts.split_seed);
        fermi::SolverConfig base = sweep_opts.solver;
        base.lambda = 0.0;
        base.batch_size = batch_list.front();
        base.seed = seed_list.front();
        const fermi::TrainResult trained =
            fermi::SgdaTrain(train, fermi::LinearSoftmaxModel(train.m, train.d()), notion, base);
        std::vector<double> grid;
        for (int i = 0; i <= 20; ++i) grid.push_back(i / 20.0);
        const auto curve = fermi::NaiveBaselineCurve(
            trained.model, fermi::MajorityLabel(train), test, notion, grid);
        WriteStream(baseline_out, [&](std::ostream& os) { fermi::WriteBaselineCsv(curve, os); });
      }
      if (failures == static_cast<int>(result.rows.size())) return kExitNumerical;
    } else if (*mask_cmd) {
      fermi::SaveCsv(fermi::MaskSensitive(fermi::LoadCsv(data_path), mask_fraction, mask_seed),
                     mask_out);
    } else if (*audit_cmd) {
      const fermi::AuditReport report = fermi::RunAudit(
          fermi::LoadCsv(data_path), Notion(fairness, advantaged), audit_seed);
      for (const auto& c : report.checks) {
        std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " value=" << c.value
                  << " tol=" << c.tolerance << '\n';
      }
      return report.AllPassed() ? 0 : kExitInternal;
    }
  } catch (const fermi::InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const fermi::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return 0;
}
