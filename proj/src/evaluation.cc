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

#include "cpstop/evaluation.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "cpstop/error.h"
#include "cpstop/util.h"

namespace cpstop {
namespace {

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
};

// Sample standard deviation; 0 for fewer than two values.
Moments ComputeMoments(const std::vector<double>& v) {
  Moments m;
  if (v.empty()) return m;
  m.mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.sd = std::sqrt(ss / (v.size() - 1));
  }
  return m;
}

double RequireOptimum(const BoundTrace& trace) {
  if (!trace.z_star) throw Error(ErrorCode::kMissingOptimum, trace.instance_id);
  return *trace.z_star;
}

void CheckAligned(const BoundTrace& trace, const GapSeries& predictions) {
  bool same = predictions.size() == trace.samples.size();
  for (std::size_t i = 0; same && i < trace.samples.size(); ++i) {
    same = predictions.ticks[i] == trace.samples[i].tick;
  }
  if (!same) {
    throw Error(ErrorCode::kSeriesMismatch,
                "predictions for " + trace.instance_id +
                    " are not sampled at the trace ticks");
  }
}

}  // namespace

double Suboptimality(const BoundTrace& trace, std::int64_t stop_tick,
                     double z_star) {
  if (z_star == 0.0) throw Error(ErrorCode::kZeroOptimum, trace.instance_id);
  const std::ptrdiff_t index = trace.IndexAt(stop_tick);
  if (index < 0) {
    throw Error(ErrorCode::kTickNotInTrace,
                trace.instance_id + " tick " + std::to_string(stop_tick));
  }
  const double upper = trace.samples[index].upper;
  if (!std::isfinite(upper)) return kInf;
  return (upper - z_star) / std::abs(z_star);
}

StopTick BaselineStop(const BoundTrace& trace, int k) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (static_cast<int>(trace.incumbents.size()) < k) return kBeyondTrace;
  return trace.incumbents[k - 1].tick;
}

std::string_view StopMethodName(StopMethod method) {
  switch (method) {
    case StopMethod::kConformal:
      return "cp";
    case StopMethod::kDeterministic:
      return "deterministic_eps";
    case StopMethod::kFirstIncumbent:
      return "stop_at_1";
    case StopMethod::kThirdIncumbent:
      return "stop_at_3";
  }
  return "?";
}

StopOutcome ReplayStop(const BoundTrace& trace, std::int64_t tick,
                       double z_star, double epsilon) {
  StopOutcome out;
  out.tick = tick;
  out.suboptimality = Suboptimality(trace, tick, z_star);
  out.nodes = trace.samples[trace.IndexAt(tick)].nodes_explored;
  out.within_eps = out.suboptimality <= epsilon;
  return out;
}

EvaluationReport Evaluate(std::span<const BoundTrace> traces,
                          std::span<const GapSeries> predictions,
                          const CalibrationResult& calibration,
                          const EvaluationOptions& options) {
  if (options.epsilon != calibration.epsilon) {
    throw Error(ErrorCode::kKappaMismatch,
                "evaluation epsilon " + std::to_string(options.epsilon) +
                    " differs from calibration epsilon " +
                    std::to_string(calibration.epsilon));
  }
  if (predictions.size() != traces.size()) {
    throw Error(ErrorCode::kMissingPredictions,
                std::to_string(predictions.size()) + " prediction series for " +
                    std::to_string(traces.size()) + " traces");
  }
  const double eps = options.epsilon;
  EvaluationReport report;
  report.epsilon = eps;
  report.delta = options.delta;
  report.kappa = calibration.kappa;
  report.alpha = calibration.alpha;
  report.c = calibration.c;
  report.n = calibration.n;
  report.calibration_hash = calibration.config_hash;

  for (std::size_t i = 0; i < traces.size(); ++i) {
    const BoundTrace& trace = traces[i];
    const double z_star = RequireOptimum(trace);
    CheckAligned(trace, predictions[i]);
    EvaluationItem item;
    item.instance_id = trace.instance_id;
    item.deterministic_tick = FallbackTick(trace, eps);
    item.reached_eps = DeterministicStopTime(trace, eps).has_value();
    const std::int64_t terminal = trace.TerminalTick();
    const std::array<std::int64_t, kNumMethods> ticks{
        LearnedStopTime(predictions[i], calibration.kappa,
                        item.deterministic_tick),
        item.deterministic_tick,
        BaselineStop(trace, 1).value_or(terminal),
        BaselineStop(trace, 3).value_or(terminal)};
    const StopOutcome det = ReplayStop(trace, item.deterministic_tick, z_star, eps);
    for (int m = 0; m < kNumMethods; ++m) {
      item.outcomes[m] = ReplayStop(trace, ticks[m], z_star, eps);
      item.outcomes[m].speedup =
          1.0 - static_cast<double>(item.outcomes[m].nodes) / det.nodes;
    }
    report.items.push_back(std::move(item));
  }

  for (int m = 0; m < kNumMethods; ++m) {
    std::vector<double> ticks, subs, nodes, speedups, reductions;
    MethodSummary& s = report.methods[m];
    double correct = 0.0;
    for (const EvaluationItem& item : report.items) {
      const StopOutcome& o = item.outcomes[m];
      ticks.push_back(static_cast<double>(o.tick));
      nodes.push_back(static_cast<double>(o.nodes));
      speedups.push_back(o.speedup);
      reductions.push_back(static_cast<double>(item.deterministic_tick - o.tick));
      if (std::isfinite(o.suboptimality)) {
        subs.push_back(o.suboptimality);
      } else {
        ++s.infinite_count;
      }
      if (o.within_eps) correct += 1.0;
    }
    const Moments t = ComputeMoments(ticks);
    const Moments u = ComputeMoments(subs);
    const Moments k = ComputeMoments(nodes);
    const Moments p = ComputeMoments(speedups);
    s.mean_ticks = t.mean;
    s.sd_ticks = t.sd;
    s.mean_suboptimality = u.mean;
    s.sd_suboptimality = u.sd;
    s.mean_nodes = k.mean;
    s.sd_nodes = k.sd;
    s.mean_speedup = p.mean;
    s.sd_speedup = p.sd;
    s.mean_tick_reduction = ComputeMoments(reductions).mean;
    s.correct = report.items.empty() ? 0.0 : correct / report.items.size();
  }

  const MethodSummary& cp = report.at(StopMethod::kConformal);
  report.coverage = cp.correct;
  report.mean_suboptimality = cp.mean_suboptimality;
  report.infinite_count = cp.infinite_count;
  report.mean_stop_tick = cp.mean_ticks;
  report.mean_tick_reduction = cp.mean_tick_reduction;
  if (calibration.replay) {
    const ReplayStats& r = *calibration.replay;
    report.bound_suboptimality = ExpectedBound(
        r.mean_suboptimality, r.max_suboptimality, calibration.c, options.delta);
    report.bound_stop_tick = ExpectedBound(r.mean_stop_tick, r.max_stop_tick,
                                           calibration.c, options.delta);
  }
  report.bound_success =
      SuccessBound(calibration.alpha, calibration.c, options.delta);
  return report;
}

ReplayStats ComputeReplayStats(std::span<const BoundTrace> traces,
                               std::span<const GapSeries> predictions,
                               double kappa, double epsilon) {
  if (predictions.size() != traces.size()) {
    throw Error(ErrorCode::kMissingPredictions, "replay predictions");
  }
  ReplayStats stats;
  std::vector<double> subs, ticks;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const BoundTrace& trace = traces[i];
    const double z_star = RequireOptimum(trace);
    CheckAligned(trace, predictions[i]);
    const std::int64_t fallback = FallbackTick(trace, epsilon);
    const std::int64_t tick = LearnedStopTime(predictions[i], kappa, fallback);
    const double s = Suboptimality(trace, tick, z_star);
    if (std::isfinite(s)) {
      subs.push_back(s);
    } else {
      ++stats.infinite_count;
    }
    ticks.push_back(static_cast<double>(tick));
    for (double g : TrueGap(trace, z_star).values) {
      if (std::isfinite(g)) {
        stats.max_suboptimality = std::max(stats.max_suboptimality, g);
        break;
      }
    }
    stats.max_stop_tick =
        std::max(stats.max_stop_tick, static_cast<double>(fallback));
  }
  stats.mean_suboptimality = ComputeMoments(subs).mean;
  stats.mean_stop_tick = ComputeMoments(ticks).mean;
  return stats;
}

std::vector<SolvedCurveRow> SolvedCurve(const EvaluationReport& report) {
  std::set<std::int64_t> budgets;
  for (const EvaluationItem& item : report.items) {
    for (const StopOutcome& o : item.outcomes) {
      if (o.within_eps) budgets.insert(o.tick);
    }
  }
  std::vector<SolvedCurveRow> rows;
  for (std::int64_t b : budgets) {
    SolvedCurveRow row;
    row.budget = b;
    for (const EvaluationItem& item : report.items) {
      for (int m = 0; m < kNumMethods; ++m) {
        const StopOutcome& o = item.outcomes[m];
        if (o.within_eps && o.tick <= b) ++row.solved[m];
      }
    }
    rows.push_back(row);
  }
  return rows;
}

ReplayItem::ReplayItem(const BoundTrace& trace, const GapSeries& predictions,
                       double epsilon)
    : epsilon_(epsilon) {
  const double z_star = RequireOptimum(trace);
  CheckAligned(trace, predictions);
  if (trace.samples.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty trace " + trace.instance_id);
  }
  const GapSeries gap = TrueGap(trace, z_star);
  const ConformalScore score = ComputeConformalScore(gap, predictions, epsilon);
  score_ = score.score;
  degenerate_ = score.degenerate;
  fallback_tick_ = FallbackTick(trace, epsilon);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (pred_min_.empty() || predictions.values[i] < pred_min_.back()) {
      pred_ticks_.push_back(predictions.ticks[i]);
      pred_min_.push_back(predictions.values[i]);
    }
  }
  for (std::size_t i = 0; i < gap.size(); ++i) {
    if (gap_values_.empty() || gap.values[i] != gap_values_.back()) {
      gap_ticks_.push_back(gap.ticks[i]);
      gap_values_.push_back(gap.values[i]);
      if (std::isfinite(gap.values[i])) {
        max_suboptimality_ = std::max(max_suboptimality_, gap.values[i]);
      }
    }
  }
}

std::int64_t ReplayItem::StopAt(double kappa) const {
  const auto it = std::partition_point(pred_min_.begin(), pred_min_.end(),
                                       [kappa](double v) { return v > kappa; });
  if (it == pred_min_.end()) return fallback_tick_;
  return std::min(pred_ticks_[it - pred_min_.begin()], fallback_tick_);
}

double ReplayItem::SuboptimalityAt(std::int64_t tick) const {
  const auto it = std::upper_bound(gap_ticks_.begin(), gap_ticks_.end(), tick);
  if (it == gap_ticks_.begin()) {
    throw Error(ErrorCode::kTickNotInTrace, std::to_string(tick));
  }
  return gap_values_[it - gap_ticks_.begin() - 1];
}

CoverageResult MonteCarloCoverage(std::span<const ReplayItem> pool,
                                  const CoverageOptions& options) {
  if (options.trials < 1) {
    throw Error(ErrorCode::kInvalidArgument, "trials must be >= 1");
  }
  if (options.c < 1) throw Error(ErrorCode::kInvalidArgument, "c must be >= 1");
  const std::size_t draw = static_cast<std::size_t>(options.c) + 1;
  if (pool.size() < draw) {
    throw Error(ErrorCode::kInsufficientPool,
                "pool of " + std::to_string(pool.size()) + " cannot supply " +
                    std::to_string(draw) + " distinct draws");
  }
  double s_max = 0.0;
  for (const ReplayItem& item : pool) {
    s_max = std::max(s_max, item.max_suboptimality());
  }

  CoverageResult result;
  result.n = QuantileIndex(options.c, options.alpha);
  result.covered.assign(options.trials, 0);
  std::vector<double> kappas(options.trials, 0.0);
  std::vector<std::uint8_t> bound_holds(options.trials, 0);

  ParallelFor(options.trials, options.workers, [&](std::int64_t trial) {
    std::mt19937_64 rng(Mix64(options.seed + Mix64(static_cast<std::uint64_t>(trial))));
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t k = 0; k < draw; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, order.size() - 1);
      std::swap(order[k], order[pick(rng)]);
    }
    std::vector<double> scores;
    scores.reserve(options.c);
    for (int k = 0; k < options.c; ++k) scores.push_back(pool[order[k]].score());
    const double kappa =
        Calibrate(scores, options.c, options.alpha, 0.0).kappa;
    kappas[trial] = kappa;
    const ReplayItem& test = pool[order[options.c]];
    result.covered[trial] = test.WithinEps(test.StopAt(kappa)) ? 1 : 0;

    auto mean_sub = [&](std::size_t begin, std::size_t end) {
      double total = 0.0;
      for (std::size_t k = begin; k < end; ++k) {
        const ReplayItem& item = pool[order[k]];
        total += item.SuboptimalityAt(item.StopAt(kappa));
      }
      return total / static_cast<double>(end - begin);
    };
    const double cal_mean = mean_sub(0, options.c);
    const double held_out = draw < pool.size() ? mean_sub(draw, pool.size())
                                               : mean_sub(options.c, draw);
    bound_holds[trial] =
        held_out <= ExpectedBound(cal_mean, s_max, options.c, options.delta) ? 1 : 0;
  });

  const double t = options.trials;
  const double p =
      std::accumulate(result.covered.begin(), result.covered.end(), 0.0) / t;
  result.mean_coverage = p;
  result.stderr_coverage = std::sqrt(p * (1.0 - p) / t);
  result.mean_kappa = std::accumulate(kappas.begin(), kappas.end(), 0.0) / t;
  result.bound_holds_fraction =
      std::accumulate(bound_holds.begin(), bound_holds.end(), 0.0) / t;
  return result;
}

double LemmaOrderingCheck(int c, int n, std::int64_t trials, std::uint64_t seed) {
  if (c < 1 || n < 1 || n > c) {
    throw Error(ErrorCode::kInvalidArgument, "need 1 <= n <= c");
  }
  if (trials < 1000) {
    throw Error(ErrorCode::kInvalidArgument, "trials must be >= 1000");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<double> z(c);
  const std::size_t rank = static_cast<std::size_t>(c - n);  // 0-based.
  std::int64_t hits = 0;
  for (std::int64_t t = 0; t < trials; ++t) {
    for (double& v : z) v = uniform(rng);
    const double test = uniform(rng);
    std::nth_element(z.begin(), z.begin() + rank, z.end());
    if (test >= z[rank]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(trials);
}

}  // namespace cpstop
