// Copyright 2026 The cpstop Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Dense bounded-variable primal simplex used for node relaxations.

#ifndef CPSTOP_LP_H_
#define CPSTOP_LP_H_

#include <span>
#include <vector>

#include "cpstop/instances.h"

namespace cpstop {

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kPivotLimit };

const char* LpStatusName(LpStatus status);

struct LpOptions {
  // 0 selects a limit proportional to the tableau size.
  int max_pivots = 0;
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-9;
};

struct LpResult {
  LpStatus status = LpStatus::kInfeasible;
  double objective = 0.0;
  std::vector<double> x;
  int pivots = 0;
};

// Solves the continuous relaxation of `instance` with the variable bounds
// replaced by [lower, upper]. Two-phase method with Bland's rule for both the
// entering and the leaving variable, so the iteration is finite on degenerate
// problems.
LpResult SolveLpRelaxation(const MilpInstance& instance,
                           std::span<const double> lower,
                           std::span<const double> upper,
                           const LpOptions& options = {});

// Sums objective terms in index order. The same routine scores incumbents in
// the tree search and in the brute-force oracle.
double EvaluateObjective(const MilpInstance& instance,
                         std::span<const double> x);

bool IsFeasible(const MilpInstance& instance, std::span<const double> x,
                double tol);

// LP over the continuous variables with every integer variable pinned to
// round(x_j). Pure-integer instances still go through the simplex, so callers
// that only need a feasibility check should use IsFeasible.
LpResult SolveWithIntegersFixed(const MilpInstance& instance,
                                std::span<const double> x,
                                const LpOptions& options = {});

}  // namespace cpstop

#endif  // CPSTOP_LP_H_
