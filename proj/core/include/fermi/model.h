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

#ifndef FERMI_MODEL_H_
#define FERMI_MODEL_H_

#include <cstdint>
#include <string>

#include <Eigen/Dense>

namespace fermi {

// Flattened parameters: the m x d weight matrix in row-major order, followed
// by the m biases. Index of weight (l, c) is l * d + c; of bias l is m * d + l.
using ParamVector = Eigen::VectorXd;

// Multiclass logistic regression: F(theta, x) = softmax(weights * x + bias).
class LinearSoftmaxModel {
 public:
  // Zero-initialized model (uniform predictions).
  LinearSoftmaxModel(int num_classes, int feature_dim);
  LinearSoftmaxModel(Eigen::MatrixXd weights, Eigen::VectorXd bias);

  int num_classes() const { return static_cast<int>(weights_.rows()); }
  int feature_dim() const { return static_cast<int>(weights_.cols()); }
  int num_params() const { return num_classes() * (feature_dim() + 1); }

  const Eigen::MatrixXd& weights() const { return weights_; }
  const Eigen::VectorXd& bias() const { return bias_; }

  ParamVector Params() const;
  void SetParams(const ParamVector& params);

  Eigen::VectorXd Logits(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd PredictProba(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  // Row i holds PredictProba(features.row(i)).
  Eigen::MatrixXd PredictProbaBatch(const Eigen::MatrixXd& features) const;

  struct LossAndGrad {
    double loss;
    ParamVector grad;
  };
  // Cross-entropy -ln F_y(theta, x) and its gradient in ParamVector layout.
  LossAndGrad CrossEntropy(const Eigen::Ref<const Eigen::VectorXd>& x,
                           int label) const;

  // m x num_params() matrix whose row j is dF_j / dtheta.
  Eigen::MatrixXd Jacobian(const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  void CheckFeatures(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  Eigen::MatrixXd weights_;
  Eigen::VectorXd bias_;
};

// Numerically stable softmax (max-subtracted).
Eigen::VectorXd Softmax(const Eigen::Ref<const Eigen::VectorXd>& logits);

// Step used by all central-difference checks in the library.
inline constexpr double kFiniteDiffStep = 1e-5;

struct FiniteDiffResult {
  bool pass = false;
  double max_rel_error = 0.0;
};

// Compares `analytic_jacobian` and `analytic_ce_grad` (evaluated by the
// caller at `model`, `x`, `label`) against central differences. The error of
// each object is ||analytic - numeric|| / max(||numeric||, 1e-12) (Frobenius
// or Euclidean), and the check passes iff the larger of the two is at most
// `tolerance`.
FiniteDiffResult CompareWithFiniteDifferences(
    const LinearSoftmaxModel& model, const Eigen::VectorXd& x, int label,
    const Eigen::MatrixXd& analytic_jacobian,
    const ParamVector& analytic_ce_grad, double tolerance);

// CompareWithFiniteDifferences against the model's own Jacobian and
// cross-entropy gradient.
FiniteDiffResult FiniteDiffCheck(const LinearSoftmaxModel& model,
                                 const Eigen::VectorXd& x, int label,
                                 double tolerance);

// Serialized form of a trained model plus the training context that produced
// it. JSON fields: m, d, k, fairness_notion, weights (row-major), bias,
// metadata {seed, lambda, iterations}.
struct ModelDocument {
  LinearSoftmaxModel model{2, 1};
  int k = 2;
  std::string fairness_notion = "dp";
  std::uint64_t seed = 0;
  double lambda = 0.0;
  std::int64_t iterations = 0;
};

std::string ModelToJson(const ModelDocument& doc);
// Throws InputError on malformed documents.
ModelDocument ModelFromJson(const std::string& text);
void SaveModel(const ModelDocument& doc, const std::string& path);
ModelDocument LoadModel(const std::string& path);

}  // namespace fermi

#endif  // FERMI_MODEL_H_
