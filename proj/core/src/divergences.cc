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

#include "fermi/divergences.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "fermi/errors.h"

namespace fermi {
namespace {

Marginals PositiveMarginals(const JointTable& table) {
  Marginals mg = ComputeMarginals(table);
  for (Eigen::Index j = 0; j < mg.p_yhat.size(); ++j) {
    if (!(mg.p_yhat(j) > 0.0)) {
      throw NumericalError("zero prediction marginal at class " +
                           std::to_string(j));
    }
  }
  for (Eigen::Index r = 0; r < mg.p_s.size(); ++r) {
    if (!(mg.p_s(r) > 0.0)) {
      throw NumericalError("zero sensitive marginal at value " +
                           std::to_string(r));
    }
  }
  return mg;
}

// sum_{j,r} p(j,r)^2 / (p(j) p(r)); equals 1 + ERMI.
double ChiSquaredMoment(const JointTable& table, const Marginals& mg) {
  const Eigen::MatrixXd& p = table.entries();
  double sum = 0.0;
  for (Eigen::Index j = 0; j < p.rows(); ++j) {
    for (Eigen::Index r = 0; r < p.cols(); ++r) {
      sum += p(j, r) * p(j, r) / (mg.p_yhat(j) * mg.p_s(r));
    }
  }
  return sum;
}

}  // namespace

double Ermi(const JointTable& table) {
  return ChiSquaredMoment(table, PositiveMarginals(table)) - 1.0;
}

double ErmiConditional(const ConditionalTables& tables) {
  double sum = 0.0;
  for (std::size_t c = 0; c < tables.tables.size(); ++c) {
    sum += tables.weights(static_cast<Eigen::Index>(c)) * Ermi(tables.tables[c]);
  }
  return sum;
}

double ShannonMi(const JointTable& table) {
  const Marginals mg = PositiveMarginals(table);
  const Eigen::MatrixXd& p = table.entries();
  double sum = 0.0;
  for (Eigen::Index j = 0; j < p.rows(); ++j) {
    for (Eigen::Index r = 0; r < p.cols(); ++r) {
      if (p(j, r) > 0.0) {
        sum += p(j, r) * std::log(p(j, r) / (mg.p_yhat(j) * mg.p_s(r)));
      }
    }
  }
  return sum;
}

double RenyiMi2(const JointTable& table) {
  return std::log(ChiSquaredMoment(table, PositiveMarginals(table)));
}

PMatrix ComputePMatrix(const JointTable& table) {
  if (table.k() > kMaxEigenDimension) {
    throw InputError("sensitive cardinality " + std::to_string(table.k()) +
                     " exceeds the supported maximum of " +
                     std::to_string(kMaxEigenDimension));
  }
  const Marginals mg = PositiveMarginals(table);
  const Eigen::MatrixXd& p = table.entries();
  const Eigen::Index k = p.cols();

  // P = D_s^{-1/2} Q^T D_y^{-1} Q D_s^{-1/2}, built entrywise so that the
  // result is exactly symmetric.
  PMatrix out;
  out.entries.resize(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = a; b < k; ++b) {
      double sum = 0.0;
      for (Eigen::Index y = 0; y < p.rows(); ++y) {
        sum += p(y, a) * p(y, b) / mg.p_yhat(y);
      }
      const double v = sum / std::sqrt(mg.p_s(a) * mg.p_s(b));
      out.entries(a, b) = v;
      out.entries(b, a) = v;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(out.entries,
                                                        Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigen-decomposition of P did not converge");
  }
  out.eigenvalues = solver.eigenvalues().reverse();
  return out;
}

double RenyiCorrelation(const JointTable& table) {
  const double lambda2 = ComputePMatrix(table).SecondEigenvalue();
  return std::sqrt(std::clamp(lambda2, 0.0, 1.0));
}

double Pearson(const JointTable& table) {
  if (table.m() != 2 || table.k() != 2) {
    throw InputError("Pearson correlation requires a 2x2 table");
  }
  const Marginals mg = ComputeMarginals(table);
  const double py = mg.p_yhat(1);
  const double ps = mg.p_s(1);
  const double var = py * (1.0 - py) * ps * (1.0 - ps);
  if (!(var > 0.0)) {
    throw NumericalError("Pearson correlation undefined for a constant marginal");
  }
  return (table(1, 1) - py * ps) / std::sqrt(var);
}

double LqViolation(const JointTable& table, double q) {
  if (!(q >= 1.0)) throw InputError("L_q violation requires q >= 1");
  const Marginals mg = ComputeMarginals(table);
  const Eigen::MatrixXd& p = table.entries();
  const bool max_norm = std::isinf(q);
  double acc = 0.0;
  for (Eigen::Index j = 0; j < p.rows(); ++j) {
    for (Eigen::Index r = 0; r < p.cols(); ++r) {
      const double dev = std::abs(p(j, r) - mg.p_yhat(j) * mg.p_s(r));
      if (max_norm) {
        acc = std::max(acc, dev);
      } else {
        acc += std::pow(dev, q);
      }
    }
  }
  return max_norm ? acc : std::pow(acc, 1.0 / q);
}

double DpConditionalLinf(const JointTable& table) {
  const Marginals mg = ComputeMarginals(table);
  const Eigen::MatrixXd& p = table.entries();
  double worst = 0.0;
  for (Eigen::Index r = 0; r < p.cols(); ++r) {
    if (!(mg.p_s(r) > 0.0)) {
      throw NumericalError("zero sensitive marginal at value " +
                           std::to_string(r));
    }
    for (Eigen::Index j = 0; j < p.rows(); ++j) {
      worst = std::max(worst, std::abs(p(j, r) / mg.p_s(r) - mg.p_yhat(j)));
    }
  }
  return worst;
}

double EoConditionalLinf(const ConditionalTables& tables) {
  double sum = 0.0;
  for (std::size_t c = 0; c < tables.tables.size(); ++c) {
    sum += tables.weights(static_cast<Eigen::Index>(c)) *
           DpConditionalLinf(tables.tables[c]);
  }
  return sum;
}

DivergenceReport ComputeDivergences(const JointTable& table) {
  DivergenceReport out;
  out.ermi = Ermi(table);
  out.shannon_mi = ShannonMi(table);
  out.renyi_mi_2 = RenyiMi2(table);
  out.renyi_correlation = RenyiCorrelation(table);
  if (table.m() == 2 && table.k() == 2) out.pearson = Pearson(table);
  out.l1_violation = LqViolation(table, 1.0);
  out.linf_violation = LqViolation(table, kInfinityNorm);
  out.dp_conditional_linf = DpConditionalLinf(table);
  return out;
}

}  // namespace fermi
