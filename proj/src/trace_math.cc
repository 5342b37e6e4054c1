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

#include "cpstop/trace_math.h"

#include <algorithm>
#include <cmath>

#include "cpstop/error.h"

namespace cpstop {
namespace {

GapSeries SkeletonOf(const BoundTrace& trace) {
  if (trace.samples.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty trace " + trace.instance_id);
  }
  GapSeries series;
  series.ticks.reserve(trace.samples.size());
  for (const TraceSample& s : trace.samples) series.ticks.push_back(s.tick);
  series.terminal_tick = trace.TerminalTick();
  return series;
}

}  // namespace

void ValidateSeries(const GapSeries& series) {
  if (series.ticks.size() != series.values.size()) {
    throw Error(ErrorCode::kInvalidArgument, "ticks/values length mismatch");
  }
  for (std::size_t i = 1; i < series.ticks.size(); ++i) {
    if (series.ticks[i] <= series.ticks[i - 1]) {
      throw Error(ErrorCode::kInvalidArgument, "ticks must increase strictly");
    }
  }
}

GapSeries TrueGap(const BoundTrace& trace, double z_star) {
  if (z_star == 0.0) {
    throw Error(ErrorCode::kZeroOptimum, trace.instance_id);
  }
  GapSeries series = SkeletonOf(trace);
  series.values.reserve(trace.samples.size());
  for (const TraceSample& s : trace.samples) {
    series.values.push_back(std::isfinite(s.upper)
                                ? (s.upper - z_star) / std::abs(z_star)
                                : kInf);
  }
  return series;
}

GapSeries AlgorithmicGapSeries(const BoundTrace& trace) {
  GapSeries series = SkeletonOf(trace);
  series.values.reserve(trace.samples.size());
  for (const TraceSample& s : trace.samples) {
    series.values.push_back(AlgorithmicGap(s.upper, s.lower));
  }
  return series;
}

GapSeries RollingMin(const GapSeries& series) {
  GapSeries out = series;
  for (std::size_t i = 1; i < out.values.size(); ++i) {
    out.values[i] = std::min(out.values[i], out.values[i - 1]);
  }
  return out;
}

StopTick LeftInverse(const GapSeries& series, double x) {
  for (std::size_t i = 0; i < series.values.size(); ++i) {
    if (series.values[i] <= x) return series.ticks[i];
  }
  return kBeyondTrace;
}

StopTick DeterministicStopTime(const BoundTrace& trace, double epsilon) {
  for (const TraceSample& s : trace.samples) {
    if (AlgorithmicGap(s.upper, s.lower) <= epsilon) return s.tick;
  }
  return kBeyondTrace;
}

std::int64_t LearnedStopTime(const GapSeries& predictions, double kappa,
                             std::int64_t fallback_tick) {
  if (predictions.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty prediction series");
  }
  const StopTick hit = LeftInverse(predictions, kappa);
  return hit ? std::min(*hit, fallback_tick) : fallback_tick;
}

std::int64_t FallbackTick(const BoundTrace& trace, double epsilon) {
  const StopTick tau = DeterministicStopTime(trace, epsilon);
  return tau ? *tau : trace.TerminalTick();
}

double ValueAt(const GapSeries& series, std::int64_t tick) {
  const auto it =
      std::upper_bound(series.ticks.begin(), series.ticks.end(), tick);
  if (it == series.ticks.begin()) {
    throw Error(ErrorCode::kTickNotInTrace, std::to_string(tick));
  }
  return series.values[(it - series.ticks.begin()) - 1];
}

}  // namespace cpstop
