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

// Step-function algebra over solver traces: gaps, rolling minima,
// left-inverses and stopping times.

#ifndef CPSTOP_TRACE_MATH_H_
#define CPSTOP_TRACE_MATH_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "cpstop/bnb.h"

namespace cpstop {

// A tick, or std::nullopt when the event does not happen within the trace.
using StopTick = std::optional<std::int64_t>;
inline constexpr StopTick kBeyondTrace = std::nullopt;

// Right-continuous step function: values[i] holds on [ticks[i], ticks[i+1]).
struct GapSeries {
  std::vector<std::int64_t> ticks;
  std::vector<double> values;
  std::int64_t terminal_tick = 0;

  std::size_t size() const { return ticks.size(); }
  bool empty() const { return ticks.empty(); }
};

// Throws kInvalidArgument unless ticks increase strictly and the lengths agree.
void ValidateSeries(const GapSeries& series);

// (U(t) - z*) / |z*| per sample; +inf before the first incumbent.
GapSeries TrueGap(const BoundTrace& trace, double z_star);

// AlgorithmicGap(U(t), L(t)) per sample.
GapSeries AlgorithmicGapSeries(const BoundTrace& trace);

GapSeries RollingMin(const GapSeries& series);

// First tick whose value is <= x.
StopTick LeftInverse(const GapSeries& series, double x);

// First tick with AlgorithmicGap <= epsilon.
StopTick DeterministicStopTime(const BoundTrace& trace, double epsilon);

// min(first tick with prediction <= kappa, fallback_tick).
std::int64_t LearnedStopTime(const GapSeries& predictions, double kappa,
                             std::int64_t fallback_tick);

// Deterministic stop tick, or the terminal tick when the trace never closes
// the gap. This is the fallback used by the learned rule.
std::int64_t FallbackTick(const BoundTrace& trace, double epsilon);

// Value in force at `tick`; throws kTickNotInTrace before the first tick.
double ValueAt(const GapSeries& series, std::int64_t tick);

}  // namespace cpstop

#endif  // CPSTOP_TRACE_MATH_H_
