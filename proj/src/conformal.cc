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

#include "cpstop/conformal.h"

#include <algorithm>
#include <cmath>
#include <functional>

#include "cpstop/error.h"

namespace cpstop {

int QuantileIndex(int c, double alpha) {
  if (c < 1) throw Error(ErrorCode::kInvalidArgument, "c must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha must lie in (0, 1)");
  }
  // Integer search; the slack absorbs rounding in (1 - alpha) * (c + 1).
  const double target = (1.0 - alpha) * (c + 1.0);
  const double slack = 1e-12 * (c + 1.0);
  for (int n = 1; n < c; ++n) {
    if (n + 1.0 >= target - slack) return n;
  }
  return c;
}

ConformalScore ComputeConformalScore(const GapSeries& true_gap,
                                     const GapSeries& predictions,
                                     double epsilon) {
  if (true_gap.ticks != predictions.ticks) {
    throw Error(ErrorCode::kSeriesMismatch,
                "true gap and predictions are sampled at different ticks");
  }
  const StopTick hit = LeftInverse(true_gap, epsilon);
  if (!hit) return {0.0, true};
  double score = predictions.values.front();
  for (std::size_t i = 0; i < predictions.size() && predictions.ticks[i] <= *hit;
       ++i) {
    score = std::min(score, predictions.values[i]);
  }
  return {score, false};
}

CalibrationResult Calibrate(std::span<const double> scores, int c,
                            double alpha, double epsilon) {
  if (scores.empty()) throw Error(ErrorCode::kEmptyScores, "no scores");
  if (static_cast<int>(scores.size()) != c) {
    throw Error(ErrorCode::kInvalidArgument,
                "score count " + std::to_string(scores.size()) +
                    " differs from c = " + std::to_string(c));
  }
  CalibrationResult result;
  result.epsilon = epsilon;
  result.alpha = alpha;
  result.c = c;
  result.n = QuantileIndex(c, alpha);
  result.scores.assign(scores.begin(), scores.end());
  std::vector<double> sorted = result.scores;
  std::stable_sort(sorted.begin(), sorted.end(), std::greater<>());
  result.kappa = sorted[result.n - 1];
  return result;
}

namespace {

void CheckDelta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw Error(ErrorCode::kInvalidDelta,
                "delta must lie in (0, 1), got " + std::to_string(delta));
  }
}

}  // namespace

double ExpectedBound(double empirical_mean, double max_value, double c,
                     double delta) {
  CheckDelta(delta);
  if (!(c >= 1.0)) throw Error(ErrorCode::kInvalidArgument, "c must be >= 1");
  if (!(max_value >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "max_value must be >= 0");
  }
  if (max_value == 0.0) return empirical_mean;
  return empirical_mean + max_value * std::sqrt((std::log(c) + 1.0) / c) +
         max_value * std::sqrt(std::log(1.0 / delta) / (2.0 * c));
}

double SuccessBound(double alpha, double c, double delta) {
  CheckDelta(delta);
  if (!(c >= 1.0)) throw Error(ErrorCode::kInvalidArgument, "c must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha must lie in (0, 1)");
  }
  return 1.0 - alpha - std::sqrt(std::log(2.0 / delta) / (2.0 * c));
}

}  // namespace cpstop
