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

#include "fermi/model.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

#include "fermi/errors.h"
#include "json.hpp"

namespace fermi {
namespace {

constexpr double kProbabilityFloor = 1e-300;

bool AllFinite(const Eigen::Ref<const Eigen::MatrixXd>& values) {
  return values.allFinite();
}

double RelativeError(double diff_norm, double ref_norm) {
  return diff_norm / std::max(ref_norm, 1e-12);
}

}  // namespace

Eigen::VectorXd Softmax(const Eigen::Ref<const Eigen::VectorXd>& logits) {
  const double top = logits.maxCoeff();
  Eigen::VectorXd out = (logits.array() - top).exp().matrix();
  double sum = 0.0;
  for (Eigen::Index j = 0; j < out.size(); ++j) sum += out(j);
  return out / sum;
}

LinearSoftmaxModel::LinearSoftmaxModel(int num_classes, int feature_dim) {
  if (num_classes < 2 || feature_dim < 1) {
    throw InputError("model needs m >= 2 classes and d >= 1 features");
  }
  weights_ = Eigen::MatrixXd::Zero(num_classes, feature_dim);
  bias_ = Eigen::VectorXd::Zero(num_classes);
}

LinearSoftmaxModel::LinearSoftmaxModel(Eigen::MatrixXd weights,
                                       Eigen::VectorXd bias)
    : weights_(std::move(weights)), bias_(std::move(bias)) {
  if (weights_.rows() < 2 || weights_.cols() < 1) {
    throw InputError("model needs m >= 2 classes and d >= 1 features");
  }
  if (bias_.size() != weights_.rows()) {
    throw InputError("bias length does not match class count");
  }
  if (!AllFinite(weights_) || !AllFinite(bias_)) {
    throw InputError("model parameters must be finite");
  }
}

ParamVector LinearSoftmaxModel::Params() const {
  const int m = num_classes();
  const int d = feature_dim();
  ParamVector out(num_params());
  for (int l = 0; l < m; ++l) {
    for (int c = 0; c < d; ++c) out(l * d + c) = weights_(l, c);
    out(m * d + l) = bias_(l);
  }
  return out;
}

void LinearSoftmaxModel::SetParams(const ParamVector& params) {
  if (params.size() != num_params()) {
    throw InputError("parameter vector length mismatch");
  }
  const int m = num_classes();
  const int d = feature_dim();
  for (int l = 0; l < m; ++l) {
    for (int c = 0; c < d; ++c) weights_(l, c) = params(l * d + c);
    bias_(l) = params(m * d + l);
  }
}

void LinearSoftmaxModel::CheckFeatures(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != feature_dim()) {
    throw InputError("feature vector has length " + std::to_string(x.size()) +
                     ", model expects " + std::to_string(feature_dim()));
  }
  if (!x.allFinite()) throw InputError("non-finite feature value");
}

Eigen::VectorXd LinearSoftmaxModel::Logits(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  CheckFeatures(x);
  return weights_ * x + bias_;
}

Eigen::VectorXd LinearSoftmaxModel::PredictProba(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return Softmax(Logits(x));
}

Eigen::MatrixXd LinearSoftmaxModel::PredictProbaBatch(
    const Eigen::MatrixXd& features) const {
  Eigen::MatrixXd out(features.rows(), num_classes());
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    out.row(i) = PredictProba(features.row(i).transpose()).transpose();
  }
  return out;
}

LinearSoftmaxModel::LossAndGrad LinearSoftmaxModel::CrossEntropy(
    const Eigen::Ref<const Eigen::VectorXd>& x, int label) const {
  const int m = num_classes();
  const int d = feature_dim();
  if (label < 0 || label >= m) {
    throw InputError("label " + std::to_string(label) + " out of range");
  }
  const Eigen::VectorXd f = PredictProba(x);
  LossAndGrad out{-std::log(std::max(f(label), kProbabilityFloor)),
                  ParamVector(num_params())};
  for (int l = 0; l < m; ++l) {
    const double dz = f(l) - (l == label ? 1.0 : 0.0);
    for (int c = 0; c < d; ++c) out.grad(l * d + c) = dz * x(c);
    out.grad(m * d + l) = dz;
  }
  return out;
}

Eigen::MatrixXd LinearSoftmaxModel::Jacobian(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const int m = num_classes();
  const int d = feature_dim();
  const Eigen::VectorXd f = PredictProba(x);
  Eigen::MatrixXd jac(m, num_params());
  // dF_j/dz_l = F_j (delta_jl - F_l); dz_l/dW(l,c) = x_c; dz_l/db_l = 1.
  for (int j = 0; j < m; ++j) {
    for (int l = 0; l < m; ++l) {
      const double dz = f(j) * ((j == l ? 1.0 : 0.0) - f(l));
      for (int c = 0; c < d; ++c) jac(j, l * d + c) = dz * x(c);
      jac(j, m * d + l) = dz;
    }
  }
  return jac;
}

FiniteDiffResult CompareWithFiniteDifferences(
    const LinearSoftmaxModel& model, const Eigen::VectorXd& x, int label,
    const Eigen::MatrixXd& analytic_jacobian,
    const ParamVector& analytic_ce_grad, double tolerance) {
  const ParamVector theta = model.Params();
  const Eigen::Index p = theta.size();
  Eigen::MatrixXd numeric_jac(model.num_classes(), p);
  ParamVector numeric_grad(p);
  LinearSoftmaxModel probe = model;
  for (Eigen::Index q = 0; q < p; ++q) {
    ParamVector plus = theta;
    ParamVector minus = theta;
    plus(q) += kFiniteDiffStep;
    minus(q) -= kFiniteDiffStep;
    probe.SetParams(plus);
    const Eigen::VectorXd f_plus = probe.PredictProba(x);
    const double l_plus = probe.CrossEntropy(x, label).loss;
    probe.SetParams(minus);
    const Eigen::VectorXd f_minus = probe.PredictProba(x);
    const double l_minus = probe.CrossEntropy(x, label).loss;
    numeric_jac.col(q) = (f_plus - f_minus) / (2.0 * kFiniteDiffStep);
    numeric_grad(q) = (l_plus - l_minus) / (2.0 * kFiniteDiffStep);
  }
  FiniteDiffResult out;
  const double jac_err = RelativeError(
      (analytic_jacobian - numeric_jac).norm(), numeric_jac.norm());
  const double grad_err = RelativeError(
      (analytic_ce_grad - numeric_grad).norm(), numeric_grad.norm());
  out.max_rel_error = std::max(jac_err, grad_err);
  out.pass = out.max_rel_error <= tolerance;
  return out;
}

FiniteDiffResult FiniteDiffCheck(const LinearSoftmaxModel& model,
                                 const Eigen::VectorXd& x, int label,
                                 double tolerance) {
  return CompareWithFiniteDifferences(model, x, label, model.Jacobian(x),
                                      model.CrossEntropy(x, label).grad,
                                      tolerance);
}

std::string ModelToJson(const ModelDocument& doc) {
  const LinearSoftmaxModel& model = doc.model;
  nlohmann::ordered_json j;
  j["m"] = model.num_classes();
  j["d"] = model.feature_dim();
  j["k"] = doc.k;
  j["fairness_notion"] = doc.fairness_notion;
  std::vector<double> weights;
  weights.reserve(static_cast<std::size_t>(model.num_classes()) *
                  static_cast<std::size_t>(model.feature_dim()));
  for (int l = 0; l < model.num_classes(); ++l) {
    for (int c = 0; c < model.feature_dim(); ++c) {
      weights.push_back(model.weights()(l, c));
    }
  }
  j["weights"] = weights;
  j["bias"] = std::vector<double>(model.bias().data(),
                                  model.bias().data() + model.bias().size());
  j["metadata"] = {{"seed", doc.seed},
                   {"lambda", doc.lambda},
                   {"iterations", doc.iterations}};
  return j.dump(2) + "\n";
}

ModelDocument ModelFromJson(const std::string& text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    const int m = j.at("m").get<int>();
    const int d = j.at("d").get<int>();
    const auto weights = j.at("weights").get<std::vector<double>>();
    const auto bias = j.at("bias").get<std::vector<double>>();
    if (m < 2 || d < 1 ||
        weights.size() != static_cast<std::size_t>(m) * static_cast<std::size_t>(d) ||
        bias.size() != static_cast<std::size_t>(m)) {
      throw InputError("model document dimensions are inconsistent");
    }
    Eigen::MatrixXd w(m, d);
    for (int l = 0; l < m; ++l) {
      for (int c = 0; c < d; ++c) w(l, c) = weights[static_cast<std::size_t>(l * d + c)];
    }
    ModelDocument doc{
        LinearSoftmaxModel(std::move(w),
                           Eigen::Map<const Eigen::VectorXd>(bias.data(), m)),
        j.at("k").get<int>(), j.at("fairness_notion").get<std::string>()};
    const auto& meta = j.at("metadata");
    doc.seed = meta.at("seed").get<std::uint64_t>();
    doc.lambda = meta.at("lambda").get<double>();
    doc.iterations = meta.at("iterations").get<std::int64_t>();
    return doc;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed model document: ") + e.what());
  }
}

void SaveModel(const ModelDocument& doc, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open " + path + " for writing");
  out << ModelToJson(doc);
}

ModelDocument LoadModel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open model file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return ModelFromJson(buffer.str());
}

}  // namespace fermi
