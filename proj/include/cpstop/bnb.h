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

// Deterministic single-threaded branch-and-bound. Every processed node is one
// tick and emits one TraceSample carrying the global bounds after the node.

#ifndef CPSTOP_BNB_H_
#define CPSTOP_BNB_H_

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cpstop/instances.h"
#include "cpstop/lp.h"

namespace cpstop {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class NodeSelection { kBestBound, kDepthFirst };
enum class Branching { kMostFractional };
enum class PivotRule { kBland };

struct BnbConfig {
  double epsilon = 1e-3;
  std::int64_t tick_limit = 2'000'000;
  NodeSelection node_selection = NodeSelection::kBestBound;
  Branching branching = Branching::kMostFractional;
  double integrality_tol = 1e-6;
  PivotRule lp_pivot_rule = PivotRule::kBland;
  bool rounding_heuristic_enabled = true;

  // Throws kInvalidArgument. epsilon = 0 is accepted and means "prove
  // optimality"; it is how ground-truth traces are produced.
  void Validate() const;
};

struct TraceSample {
  std::int64_t tick = 0;
  double upper = kInf;   // +inf before the first incumbent.
  double lower = -kInf;  // -inf before a bound is known.
  std::int64_t nodes_explored = 0;
  std::optional<int> incumbent_id;  // Set on the tick an incumbent appeared.
};

struct Incumbent {
  std::int64_t tick = 0;
  double objective = 0.0;
  std::vector<double> solution;
};

enum class SolveStatus {
  kOptimalWithinEps,
  kTickLimit,
  kInfeasible,
  kUnbounded,
  kStoppedByCallback,
};

const char* SolveStatusName(SolveStatus status);
SolveStatus ParseSolveStatus(const std::string& name);

struct BoundTrace {
  std::string instance_id;
  std::vector<TraceSample> samples;
  std::vector<Incumbent> incumbents;
  SolveStatus status = SolveStatus::kTickLimit;
  std::optional<double> z_star;
  // Nodes whose relaxation hit the pivot limit.
  std::int64_t lp_failures = 0;

  std::int64_t TerminalTick() const {
    return samples.empty() ? 0 : samples.back().tick;
  }
  // Index of the sample in force at `tick` (last sample with s.tick <= tick),
  // or -1 when `tick` precedes the first sample.
  std::ptrdiff_t IndexAt(std::int64_t tick) const;
};

struct SolveResult {
  BoundTrace trace;
  std::optional<std::vector<double>> best_solution;
  std::optional<double> best_objective;
};

enum class CallbackAction { kContinue, kStop };
using TickCallback = std::function<CallbackAction(const TraceSample&)>;

// (upper - lower) / |lower|; 0 when the bounds coincide, +inf when a bound is
// a sentinel or lower = 0 with upper != lower.
double AlgorithmicGap(double upper, double lower);

SolveResult Solve(const MilpInstance& instance, const BnbConfig& config,
                  const TickCallback& on_tick = {});

}  // namespace cpstop

#endif  // CPSTOP_BNB_H_
