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

// Conformal calibration of the stopping threshold and the closed-form
// concentration bounds reported next to the empirical metrics.

#ifndef CPSTOP_CONFORMAL_H_
#define CPSTOP_CONFORMAL_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cpstop/trace_math.h"

namespace cpstop {

// Smallest n with (n + 1) / (c + 1) >= 1 - alpha, clamped to [1, c].
int QuantileIndex(int c, double alpha);

struct ConformalScore {
  double score = 0.0;
  // The true gap never reached epsilon inside the trace; score is 0.
  bool degenerate = false;
};

// Minimum prediction over ticks up to the first tick whose true gap is at
// most epsilon. Both series must share the same ticks (kSeriesMismatch).
ConformalScore ComputeConformalScore(const GapSeries& true_gap,
                                     const GapSeries& predictions,
                                     double epsilon);

// Calibration-set replay at the chosen threshold. Feeds the expected-value
// bounds; max_* are the boundedness constants enforced by the fallback.
struct ReplayStats {
  double mean_suboptimality = 0.0;  // Over finite values.
  int infinite_count = 0;
  double mean_stop_tick = 0.0;
  double max_suboptimality = 0.0;
  double max_stop_tick = 0.0;
};

struct CalibrationResult {
  double kappa = 0.0;
  double epsilon = 0.0;
  double alpha = 0.0;
  int c = 0;
  int n = 0;
  std::vector<double> scores;
  int dropped_count = 0;
  std::string config_hash;
  std::optional<ReplayStats> replay;
};

// kappa is the n-th largest score, n = QuantileIndex(c, alpha).
// Throws kEmptyScores; kInvalidArgument when scores.size() != c.
CalibrationResult Calibrate(std::span<const double> scores, int c,
                            double alpha, double epsilon);

// mean + max * sqrt(log(e c) / c) + max * sqrt(log(1 / delta) / (2 c)).
// Throws kInvalidDelta unless 0 < delta < 1.
double ExpectedBound(double empirical_mean, double max_value, double c,
                     double delta);

// 1 - alpha - sqrt(log(2 / delta) / (2 c)); may be negative.
double SuccessBound(double alpha, double c, double delta);

}  // namespace cpstop

#endif  // CPSTOP_CONFORMAL_H_
