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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fermi/errors.h"
#include "test_util.h"

namespace fermi {
namespace {

LinearSoftmaxModel RandomModel(int m, int d, std::mt19937_64& gen, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  LinearSoftmaxModel model(m, d);
  ParamVector theta(model.num_params());
  for (int i = 0; i < theta.size(); ++i) theta(i) = n(gen);
  model.SetParams(theta);
  return model;
}

Eigen::VectorXd RandomVector(int d, std::mt19937_64& gen) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::VectorXd x(d);
  for (int i = 0; i < d; ++i) x(i) = n(gen);
  return x;
}

TEST(SoftmaxTest, Examples) {
  EXPECT_TRUE(Softmax(Eigen::Vector3d::Zero()).isApprox(Eigen::Vector3d::Constant(1.0 / 3)));
  const Eigen::VectorXd f = Softmax(Eigen::Vector2d(std::log(3.0), 0.0));
  EXPECT_NEAR(f(0), 0.75, 1e-15);
  EXPECT_NEAR(f(1), 0.25, 1e-15);
  const Eigen::Vector3d z(0.3, -1.2, 2.0);
  EXPECT_TRUE(Softmax(z).isApprox(Softmax((z.array() + 1e3).matrix()), 1e-13));
  EXPECT_TRUE(Softmax(Eigen::Vector2d(800.0, 0.0)).allFinite());
}

TEST(ModelTest, ZeroModelIsUniform) {
  LinearSoftmaxModel model(4, 3);
  EXPECT_TRUE(model.PredictProba(Eigen::Vector3d(1, 2, 3))
                  .isApprox(Eigen::Vector4d::Constant(0.25)));
  EXPECT_NEAR(model.CrossEntropy(Eigen::Vector3d(1, 2, 3), 2).loss, std::log(4.0), 1e-15);
}

TEST(ModelTest, ParamLayoutMatchesReference) {
  std::mt19937_64 gen(1);
  const LinearSoftmaxModel model = RandomModel(3, 4, gen);
  const Eigen::VectorXd x = RandomVector(4, gen);
  EXPECT_TRUE(model.PredictProba(x).isApprox(testing::ProbaRef(model.Params(), x, 3), 1e-14));
  LinearSoftmaxModel copy(3, 4);
  copy.SetParams(model.Params());
  EXPECT_EQ(copy.Params(), model.Params());
  EXPECT_THROW(copy.SetParams(ParamVector::Zero(3)), InputError);
}

TEST(ModelTest, ConfidentCorrectPredictionHasVanishingLoss) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(2, 1);
  w(1, 0) = 60.0;
  const LinearSoftmaxModel model(w, Eigen::Vector2d::Zero());
  EXPECT_LT(model.CrossEntropy(Eigen::VectorXd::Ones(1), 1).loss, 1e-20);
  EXPECT_TRUE(std::isfinite(model.CrossEntropy(Eigen::VectorXd::Ones(1), 0).loss));
}

TEST(ModelTest, CrossEntropyGradientMatchesFiniteDifferences) {
  std::mt19937_64 gen(2);
  for (int t = 0; t < 20; ++t) {
    const int m = 2 + t % 3, d = 1 + t % 5;
    LinearSoftmaxModel model = RandomModel(m, d, gen);
    const Eigen::VectorXd x = RandomVector(d, gen);
    const int y = t % m;
    const Eigen::VectorXd numeric = testing::CentralDifference(
        [&](const Eigen::VectorXd& th) { return -std::log(testing::ProbaRef(th, x, m)(y)); },
        model.Params());
    EXPECT_LE(testing::RelativeError(model.CrossEntropy(x, y).grad, numeric), 1e-5);
  }
}

TEST(JacobianTest, ZeroModelBinary) {
  LinearSoftmaxModel model(2, 2);
  const Eigen::Vector2d x(3.0, -1.0);
  const Eigen::MatrixXd jac = model.Jacobian(x);
  // Row 0: d f_0 / d theta = 1/4 * (x, -x, 1, -1) in the layout (w0, w1, b).
  Eigen::VectorXd expected(6);
  expected << 0.75, -0.25, -0.75, 0.25, 0.25, -0.25;
  EXPECT_TRUE(jac.row(0).transpose().isApprox(expected, 1e-15));
  EXPECT_TRUE(jac.row(1).isApprox(-jac.row(0), 1e-15));
}

TEST(JacobianTest, RowsSumToZeroAndMatchReference) {
  std::mt19937_64 gen(3);
  for (int t = 0; t < 20; ++t) {
    const int m = 2 + t % 4, d = 1 + t % 6;
    const LinearSoftmaxModel model = RandomModel(m, d, gen);
    const Eigen::VectorXd x = RandomVector(d, gen);
    const Eigen::MatrixXd jac = model.Jacobian(x);
    EXPECT_LE(jac.colwise().sum().cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_TRUE(jac.isApprox(testing::JacobianRef(model.Params(), x, m), 1e-12));
    for (int l = 0; l < m; ++l) {
      const Eigen::VectorXd numeric = testing::CentralDifference(
          [&](const Eigen::VectorXd& th) { return testing::ProbaRef(th, x, m)(l); },
          model.Params());
      EXPECT_LE(testing::RelativeError(jac.row(l).transpose(), numeric), 1e-5);
    }
  }
}

TEST(FiniteDiffCheckTest, RandomModelPasses) {
  std::mt19937_64 gen(4);
  const LinearSoftmaxModel model = RandomModel(3, 4, gen);
  const FiniteDiffResult r = FiniteDiffCheck(model, RandomVector(4, gen), 1, 1e-4);
  EXPECT_TRUE(r.pass);
  EXPECT_LT(r.max_rel_error, 1e-6);
}

TEST(FiniteDiffCheckTest, ZeroModelPasses) {
  EXPECT_TRUE(FiniteDiffCheck(LinearSoftmaxModel(2, 3), Eigen::Vector3d(1, -2, 0.5), 0, 1e-4)
                  .pass);
}

TEST(FiniteDiffCheckTest, CorruptedJacobianFails) {
  std::mt19937_64 gen(5);
  const LinearSoftmaxModel model = RandomModel(3, 2, gen);
  const Eigen::VectorXd x = RandomVector(2, gen);
  Eigen::MatrixXd jac = model.Jacobian(x);
  jac(1, 2) += 0.1;
  const FiniteDiffResult r =
      CompareWithFiniteDifferences(model, x, 0, jac, model.CrossEntropy(x, 0).grad, 1e-4);
  EXPECT_FALSE(r.pass);
}

TEST(ModelJsonTest, RoundTripsExactly) {
  std::mt19937_64 gen(6);
  ModelDocument doc;
  doc.model = RandomModel(3, 5, gen);
  doc.k = 4;
  doc.fairness_notion = "eodds";
  doc.seed = 18446744073709551615ull;
  doc.lambda = 0.1;
  doc.iterations = 123;
  const std::string text = ModelToJson(doc);
  const ModelDocument back = ModelFromJson(text);
  EXPECT_EQ(back.model.Params(), doc.model.Params());
  EXPECT_EQ(back.k, 4);
  EXPECT_EQ(back.fairness_notion, "eodds");
  EXPECT_EQ(back.seed, doc.seed);
  EXPECT_EQ(back.lambda, 0.1);
  EXPECT_EQ(back.iterations, 123);
  EXPECT_EQ(ModelToJson(back), text);
}

TEST(ModelJsonTest, RejectsMalformedDocuments) {
  EXPECT_THROW(ModelFromJson("{"), InputError);
  EXPECT_THROW(ModelFromJson(R"({"m":2,"d":1,"k":2,"fairness_notion":"dp",
      "weights":[1],"bias":[0,0],"metadata":{"seed":0,"lambda":0,"iterations":0}})"),
               InputError);
  EXPECT_THROW(ModelFromJson(R"({"m":2,"d":1})"), InputError);
}

}  // namespace
}  // namespace fermi
