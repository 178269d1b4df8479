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

#ifndef FERMI_AUDIT_H_
#define FERMI_AUDIT_H_

#include <cstdint>
#include <string>
#include <vector>

#include "fermi/data.h"
#include "fermi/solver.h"

namespace fermi {

struct AuditCheck {
  std::string name;
  bool pass = false;
  double value = 0.0;      // worst observed error (or violation)
  double tolerance = 0.0;
};

struct AuditReport {
  std::vector<AuditCheck> checks;
  bool AllPassed() const;
};

// Self-checks of the estimator on a dataset: agreement of the per-sample
// objective and gradients with their full-batch counterparts, finite
// differences of every analytic gradient, the Danskin gradient of the
// max-out objective, the variational maximizer and the ordering between the
// dependence measures on random tables. Masked rows are allowed; evaluation
// is over contributing rows only.
AuditReport RunAudit(const LabeledDataset& dataset, const FairnessNotion& notion,
                     std::uint64_t seed);

}  // namespace fermi

#endif  // FERMI_AUDIT_H_
