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

// Replays solved traces under the learned and baseline stopping rules and
// runs the Monte Carlo experiments behind the coverage guarantee.

#ifndef CPSTOP_EVALUATION_H_
#define CPSTOP_EVALUATION_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cpstop/bnb.h"
#include "cpstop/conformal.h"
#include "cpstop/trace_math.h"

namespace cpstop {

// (U(stop_tick) - z*) / |z*|; +inf when no incumbent exists yet.
// Throws kZeroOptimum and kTickNotInTrace.
double Suboptimality(const BoundTrace& trace, std::int64_t stop_tick,
                     double z_star);

// Tick of the k-th incumbent, kBeyondTrace when there are fewer.
StopTick BaselineStop(const BoundTrace& trace, int k);

enum class StopMethod { kConformal, kDeterministic, kFirstIncumbent, kThirdIncumbent };
inline constexpr int kNumMethods = 4;
inline constexpr std::array<StopMethod, kNumMethods> kAllMethods{
    StopMethod::kConformal, StopMethod::kDeterministic,
    StopMethod::kFirstIncumbent, StopMethod::kThirdIncumbent};
std::string_view StopMethodName(StopMethod method);

struct StopOutcome {
  std::int64_t tick = 0;
  std::int64_t nodes = 0;
  double suboptimality = 0.0;
  bool within_eps = false;
  // 1 - nodes / nodes at the deterministic stop.
  double speedup = 0.0;
};

struct EvaluationItem {
  std::string instance_id;
  // Deterministic stop, or the terminal tick when the gap never closes.
  std::int64_t deterministic_tick = 0;
  bool reached_eps = false;
  std::array<StopOutcome, kNumMethods> outcomes;

  const StopOutcome& at(StopMethod m) const {
    return outcomes[static_cast<int>(m)];
  }
};

struct MethodSummary {
  double mean_ticks = 0.0;
  double sd_ticks = 0.0;
  double mean_suboptimality = 0.0;  // Over finite values.
  double sd_suboptimality = 0.0;
  int infinite_count = 0;
  double mean_nodes = 0.0;
  double sd_nodes = 0.0;
  double correct = 0.0;  // Fraction within epsilon.
  double mean_speedup = 0.0;
  double sd_speedup = 0.0;
  double mean_tick_reduction = 0.0;  // Mean of deterministic_tick - tick.
};

struct EvaluationOptions {
  double epsilon = 1e-3;
  double delta = 0.05;
};

struct EvaluationReport {
  std::vector<EvaluationItem> items;
  std::array<MethodSummary, kNumMethods> methods;
  double epsilon = 0.0;
  double delta = 0.0;
  double kappa = 0.0;
  double alpha = 0.0;
  int c = 0;
  int n = 0;
  // Learned rule aggregates.
  double coverage = 0.0;
  double mean_suboptimality = 0.0;
  int infinite_count = 0;
  double mean_stop_tick = 0.0;
  double mean_tick_reduction = 0.0;
  // Present when the calibration carries replay statistics.
  std::optional<double> bound_suboptimality;
  std::optional<double> bound_stop_tick;
  double bound_success = 0.0;
  std::string calibration_hash;
  std::string config_hash;

  const MethodSummary& at(StopMethod m) const {
    return methods[static_cast<int>(m)];
  }
};

// Outcome of stopping `trace` at `tick`. Speedup is left at 0.
StopOutcome ReplayStop(const BoundTrace& trace, std::int64_t tick,
                       double z_star, double epsilon);

// Every trace needs z_star and a prediction series on its sample ticks.
// Throws kMissingPredictions, kSeriesMismatch, kMissingOptimum and
// kKappaMismatch (options.epsilon differs from the calibration epsilon).
EvaluationReport Evaluate(std::span<const BoundTrace> traces,
                          std::span<const GapSeries> predictions,
                          const CalibrationResult& calibration,
                          const EvaluationOptions& options);

// Learned-rule replay of the calibration traces themselves.
ReplayStats ComputeReplayStats(std::span<const BoundTrace> traces,
                               std::span<const GapSeries> predictions,
                               double kappa, double epsilon);

// Instances stopped within epsilon by each method, at every budget where a
// count changes.
struct SolvedCurveRow {
  std::int64_t budget = 0;
  std::array<int, kNumMethods> solved{};
};
std::vector<SolvedCurveRow> SolvedCurve(const EvaluationReport& report);

// One solved trace reduced to what repeated calibrate/test draws need: the
// breakpoints of the rolling-min prediction and of the true gap.
class ReplayItem {
 public:
  ReplayItem(const BoundTrace& trace, const GapSeries& predictions,
             double epsilon);

  double score() const { return score_; }
  bool degenerate() const { return degenerate_; }
  std::int64_t fallback_tick() const { return fallback_tick_; }
  // Largest finite true gap; bounds the suboptimality of any stop.
  double max_suboptimality() const { return max_suboptimality_; }

  std::int64_t StopAt(double kappa) const;
  double SuboptimalityAt(std::int64_t tick) const;
  bool WithinEps(std::int64_t tick) const {
    return SuboptimalityAt(tick) <= epsilon_;
  }

 private:
  double epsilon_;
  double score_ = 0.0;
  bool degenerate_ = false;
  std::int64_t fallback_tick_ = 0;
  double max_suboptimality_ = 0.0;
  std::vector<std::int64_t> pred_ticks_;
  std::vector<double> pred_min_;
  std::vector<std::int64_t> gap_ticks_;
  std::vector<double> gap_values_;
};

struct CoverageOptions {
  int trials = 200;
  int c = 50;
  double alpha = 0.1;
  double delta = 0.05;
  std::uint64_t seed = 0;
  int workers = 0;
};

struct CoverageResult {
  double mean_coverage = 0.0;
  double stderr_coverage = 0.0;
  double mean_kappa = 0.0;
  int n = 0;
  // Fraction of trials whose out-of-sample mean suboptimality stays below
  // ExpectedBound(calibration mean, pool max, c, delta).
  double bound_holds_fraction = 0.0;
  std::vector<std::uint8_t> covered;
};

// Each trial draws c + 1 pool items without replacement: c calibrate, the
// last is the test point. Throws kInsufficientPool.
CoverageResult MonteCarloCoverage(std::span<const ReplayItem> pool,
                                  const CoverageOptions& options);

// Fraction of trials with Z_{c+1} >= Z_[c+1-n], where Z_[k] is the k-th
// smallest of Z_1..Z_c, for iid uniforms.
double LemmaOrderingCheck(int c, int n, std::int64_t trials, std::uint64_t seed);

}  // namespace cpstop

#endif  // CPSTOP_EVALUATION_H_
