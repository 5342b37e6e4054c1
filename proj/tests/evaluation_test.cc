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

#include <gtest/gtest.h>

#include <cmath>

#include "cpstop/conformal.h"
#include "cpstop/error.h"
#include "test_util.h"

namespace cpstop {
namespace {

using testing::MakeSeries;
using testing::MakeTrace;

ErrorCode CodeOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

std::vector<BoundTrace> SolvedPool(int count, std::uint64_t seed) {
  BnbConfig exact;
  exact.epsilon = 0.0;
  std::vector<BoundTrace> traces;
  for (const MilpInstance& m :
       GenerateFamily(Family::kKnapsack, {{"n", 14}}, seed, count, Split::kTest)
           .instances) {
    traces.push_back(Solve(m, exact).trace);
  }
  return traces;
}

std::vector<GapSeries> OraclePredictions(const std::vector<BoundTrace>& traces) {
  std::vector<GapSeries> out;
  for (const BoundTrace& t : traces) out.push_back(TrueGap(t, *t.z_star));
  return out;
}

std::vector<GapSeries> ConstantPredictions(const std::vector<BoundTrace>& traces,
                                           double value) {
  std::vector<GapSeries> out;
  for (const BoundTrace& t : traces) {
    GapSeries s = TrueGap(t, *t.z_star);
    std::fill(s.values.begin(), s.values.end(), value);
    out.push_back(s);
  }
  return out;
}

CalibrationResult Fixed(double kappa, double eps) {
  CalibrationResult c;
  c.kappa = kappa;
  c.epsilon = eps;
  c.alpha = 0.1;
  c.c = 20;
  c.n = 18;
  return c;
}

TEST(SuboptimalityTest, Examples) {
  const BoundTrace t = MakeTrace({kInf, 101, 100}, {90, 95, 100}, 100);
  EXPECT_DOUBLE_EQ(Suboptimality(t, 1, 100), 0.01);
  EXPECT_EQ(Suboptimality(t, 2, 100), 0.0);
  EXPECT_EQ(Suboptimality(t, 0, 100), kInf);
  EXPECT_FALSE(ReplayStop(t, 0, 100, 0.1).within_eps);
  EXPECT_TRUE(ReplayStop(t, 1, 100, 0.01).within_eps);
  EXPECT_EQ(ReplayStop(t, 2, 100, 0.0).nodes, 3);
  EXPECT_EQ(CodeOf([&] { Suboptimality(t, 1, 0); }), ErrorCode::kZeroOptimum);
  EXPECT_EQ(CodeOf([&] { Suboptimality(t, -1, 100); }),
            ErrorCode::kTickNotInTrace);
}

TEST(BaselineStopTest, Examples) {
  std::vector<double> u(31), l(31, 0.0);
  for (int t = 0; t <= 30; ++t) u[t] = t < 4 ? kInf : t < 9 ? 30 : t < 30 ? 20 : 10;
  const BoundTrace trace = MakeTrace(u, l);
  EXPECT_EQ(BaselineStop(trace, 1), StopTick(4));
  EXPECT_EQ(BaselineStop(trace, 3), StopTick(30));
  EXPECT_EQ(BaselineStop(trace, 5), kBeyondTrace);
  EXPECT_EQ(CodeOf([&] { BaselineStop(trace, 0); }), ErrorCode::kInvalidArgument);
}

TEST(MethodNamesTest, Stable) {
  EXPECT_EQ(StopMethodName(StopMethod::kConformal), "cp");
  EXPECT_EQ(StopMethodName(StopMethod::kDeterministic), "deterministic_eps");
  EXPECT_EQ(StopMethodName(StopMethod::kFirstIncumbent), "stop_at_1");
  EXPECT_EQ(StopMethodName(StopMethod::kThirdIncumbent), "stop_at_3");
}

class ReplayTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { pool_ = new std::vector<BoundTrace>(SolvedPool(80, 31)); }
  static void TearDownTestSuite() { delete pool_; }
  static const std::vector<BoundTrace>& pool() { return *pool_; }
  static std::vector<BoundTrace>* pool_;
};
std::vector<BoundTrace>* ReplayTest::pool_ = nullptr;

TEST_F(ReplayTest, OraclePredictorAtEpsilon) {
  const double eps = 1e-3;
  const std::vector<GapSeries> preds = OraclePredictions(pool());
  const EvaluationReport r = Evaluate(pool(), preds, Fixed(eps, eps), {eps, 0.05});
  EXPECT_EQ(r.coverage, 1.0);
  for (std::size_t i = 0; i < pool().size(); ++i) {
    const StopTick li = LeftInverse(preds[i], eps);
    ASSERT_TRUE(li.has_value());
    EXPECT_EQ(r.items[i].at(StopMethod::kConformal).tick,
              std::min(*li, FallbackTick(pool()[i], eps)));
  }
  EXPECT_EQ(r.at(StopMethod::kDeterministic).correct, 1.0);
  EXPECT_GE(r.at(StopMethod::kConformal).mean_speedup, 0.0);
}

TEST_F(ReplayTest, InfiniteThresholdStopsAtTickZero) {
  const double eps = 1e-3;
  const std::vector<GapSeries> preds = OraclePredictions(pool());
  const EvaluationReport r = Evaluate(pool(), preds, Fixed(kInf, eps), {eps, 0.05});
  double at_zero = 0.0;
  for (std::size_t i = 0; i < pool().size(); ++i) {
    EXPECT_EQ(r.items[i].at(StopMethod::kConformal).tick, 0);
    if (Suboptimality(pool()[i], 0, *pool()[i].z_star) <= eps) at_zero += 1.0;
  }
  EXPECT_DOUBLE_EQ(r.coverage, at_zero / pool().size());
}

TEST_F(ReplayTest, ZeroThresholdFallsBack) {
  const double eps = 1e-3;
  const std::vector<GapSeries> preds = ConstantPredictions(pool(), 0.5);
  const EvaluationReport r = Evaluate(pool(), preds, Fixed(0.0, eps), {eps, 0.05});
  EXPECT_EQ(r.coverage, 1.0);
  EXPECT_EQ(r.at(StopMethod::kConformal).mean_speedup, 0.0);
  EXPECT_EQ(r.mean_tick_reduction, 0.0);
  for (const EvaluationItem& item : r.items) {
    EXPECT_EQ(item.at(StopMethod::kConformal).tick, item.deterministic_tick);
  }
}

TEST_F(ReplayTest, ReportAggregates) {
  const double eps = 1e-3;
  const std::vector<GapSeries> preds = OraclePredictions(pool());
  CalibrationResult cal = Fixed(eps, eps);
  cal.replay = ComputeReplayStats(pool(), preds, eps, eps);
  const EvaluationReport r = Evaluate(pool(), preds, cal, {eps, 0.05});
  ASSERT_TRUE(r.bound_suboptimality.has_value());
  EXPECT_EQ(*r.bound_suboptimality,
            ExpectedBound(cal.replay->mean_suboptimality,
                          cal.replay->max_suboptimality, cal.c, 0.05));
  EXPECT_EQ(r.bound_success, SuccessBound(0.1, 20, 0.05));
  EXPECT_EQ(cal.replay->infinite_count, 0);
  for (const EvaluationItem& item : r.items) {
    EXPECT_LE(item.at(StopMethod::kConformal).tick, item.deterministic_tick);
    EXPECT_EQ(item.at(StopMethod::kDeterministic).speedup, 0.0);
  }
  const std::vector<SolvedCurveRow> curve = SolvedCurve(r);
  ASSERT_FALSE(curve.empty());
  const int total = static_cast<int>(pool().size());
  for (std::size_t i = 1; i < curve.size(); ++i) {
    EXPECT_GT(curve[i].budget, curve[i - 1].budget);
    for (int m = 0; m < kNumMethods; ++m) {
      EXPECT_GE(curve[i].solved[m], curve[i - 1].solved[m]);
    }
  }
  EXPECT_EQ(curve.back().solved[static_cast<int>(StopMethod::kDeterministic)],
            total);
}

TEST_F(ReplayTest, EvaluateErrors) {
  const double eps = 1e-3;
  const std::vector<GapSeries> preds = OraclePredictions(pool());
  EXPECT_EQ(CodeOf([&] { Evaluate(pool(), preds, Fixed(eps, 0.01), {eps, 0.05}); }),
            ErrorCode::kKappaMismatch);
  const std::span<const GapSeries> fewer(preds.data(), preds.size() - 1);
  EXPECT_EQ(CodeOf([&] { Evaluate(pool(), fewer, Fixed(eps, eps), {eps, 0.05}); }),
            ErrorCode::kMissingPredictions);
  std::vector<GapSeries> shifted = preds;
  shifted[0] = MakeSeries({1.0});
  EXPECT_EQ(CodeOf([&] { Evaluate(pool(), shifted, Fixed(eps, eps), {eps, 0.05}); }),
            ErrorCode::kSeriesMismatch);
  std::vector<BoundTrace> unsolved = pool();
  unsolved[0].z_star.reset();
  EXPECT_EQ(CodeOf([&] { Evaluate(unsolved, preds, Fixed(eps, eps), {eps, 0.05}); }),
            ErrorCode::kMissingOptimum);
}

TEST_F(ReplayTest, ReplayItemMatchesDirectReplay) {
  const double eps = 1e-3;
  std::vector<GapSeries> preds = OraclePredictions(pool());
  for (GapSeries& s : preds) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (std::isfinite(s.values[i])) s.values[i] *= 1.0 + 0.3 * std::sin(i);
    }
  }
  for (std::size_t i = 0; i < pool().size(); ++i) {
    const ReplayItem item(pool()[i], preds[i], eps);
    const ConformalScore score =
        ComputeConformalScore(TrueGap(pool()[i], *pool()[i].z_star), preds[i], eps);
    EXPECT_EQ(item.score(), score.score);
    EXPECT_EQ(item.degenerate(), score.degenerate);
    for (double kappa : {0.0, 1e-4, 1e-3, 0.01, 0.1, kInf}) {
      const std::int64_t direct =
          LearnedStopTime(preds[i], kappa, FallbackTick(pool()[i], eps));
      EXPECT_EQ(item.StopAt(kappa), direct);
      EXPECT_EQ(item.SuboptimalityAt(direct),
                Suboptimality(pool()[i], direct, *pool()[i].z_star));
    }
  }
}

TEST_F(ReplayTest, MonteCarloOracleCoversEverything) {
  const double eps = 1e-3;
  const std::vector<GapSeries> preds = OraclePredictions(pool());
  std::vector<ReplayItem> items;
  for (std::size_t i = 0; i < pool().size(); ++i) {
    items.emplace_back(pool()[i], preds[i], eps);
  }
  CoverageOptions opt;
  opt.trials = 200;
  opt.c = 30;
  opt.alpha = 0.1;
  const CoverageResult r = MonteCarloCoverage(items, opt);
  EXPECT_EQ(r.mean_coverage, 1.0);
  EXPECT_EQ(r.n, QuantileIndex(30, 0.1));
  EXPECT_LE(r.mean_kappa, eps);
  EXPECT_EQ(r.covered.size(), 200u);

  opt.workers = 3;
  const CoverageResult again = MonteCarloCoverage(items, opt);
  EXPECT_EQ(again.covered, r.covered);
  EXPECT_EQ(again.mean_kappa, r.mean_kappa);
}

TEST_F(ReplayTest, MonteCarloZeroPredictorStopsImmediately) {
  // A predictor that is always 0 calibrates to kappa = 0 and fires at the
  // first tick, so coverage is the share of traces already within epsilon
  // there.
  const double eps = 1e-3;
  const std::vector<GapSeries> preds = ConstantPredictions(pool(), 0.0);
  std::vector<ReplayItem> items;
  double at_zero = 0.0;
  for (std::size_t i = 0; i < pool().size(); ++i) {
    items.emplace_back(pool()[i], preds[i], eps);
    if (items.back().WithinEps(0)) at_zero += 1.0;
  }
  CoverageOptions opt;
  opt.trials = 400;
  opt.c = 30;
  const CoverageResult r = MonteCarloCoverage(items, opt);
  EXPECT_EQ(r.mean_kappa, 0.0);
  EXPECT_NEAR(r.mean_coverage, at_zero / pool().size(), 4 * 0.5 / std::sqrt(400.0));
}

TEST_F(ReplayTest, MonteCarloNoisyPredictorMeetsMarginalBound) {
  const double eps = 1e-3;
  std::vector<GapSeries> preds = OraclePredictions(pool());
  std::uint64_t state = 99;
  for (GapSeries& s : preds) {
    for (double& v : s.values) {
      state = state * 6364136223846793005ULL + 1442695040888963407ULL;
      const double noise = static_cast<double>(state >> 11) / 9007199254740992.0;
      v = std::isfinite(v) ? v * (0.2 + 1.6 * noise) : 1.0;
    }
  }
  std::vector<ReplayItem> items;
  for (std::size_t i = 0; i < pool().size(); ++i) {
    items.emplace_back(pool()[i], preds[i], eps);
  }
  CoverageOptions opt;
  opt.trials = 400;
  opt.c = 30;
  opt.alpha = 0.2;
  const CoverageResult r = MonteCarloCoverage(items, opt);
  const double floor = static_cast<double>(r.n) / (opt.c + 1);
  EXPECT_GE(r.mean_coverage, floor - 3 * r.stderr_coverage);
}

TEST_F(ReplayTest, InsufficientPool) {
  const double eps = 1e-3;
  const std::vector<GapSeries> preds = OraclePredictions(pool());
  std::vector<ReplayItem> items;
  for (int i = 0; i < 10; ++i) items.emplace_back(pool()[i], preds[i], eps);
  CoverageOptions opt;
  opt.c = 10;
  EXPECT_EQ(CodeOf([&] { MonteCarloCoverage(items, opt); }),
            ErrorCode::kInsufficientPool);
}

TEST(LemmaOrderingTest, MatchesExactOrderStatistic) {
  // The test draw clears the (c - n + 1)-th smallest calibration draw exactly
  // when it ranks in the top n of c + 1 exchangeable values.
  EXPECT_NEAR(LemmaOrderingCheck(9, 5, 100000, 1), 0.5, 0.005);
  EXPECT_NEAR(LemmaOrderingCheck(9, 9, 100000, 2), 0.9, 0.005);
  EXPECT_NEAR(LemmaOrderingCheck(1, 1, 100000, 3), 0.5, 0.005);
  EXPECT_EQ(LemmaOrderingCheck(9, 5, 10000, 4), LemmaOrderingCheck(9, 5, 10000, 4));
}

TEST(LemmaOrderingTest, Errors) {
  EXPECT_EQ(CodeOf([] { LemmaOrderingCheck(5, 6, 1000, 0); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([] { LemmaOrderingCheck(5, 0, 1000, 0); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([] { LemmaOrderingCheck(5, 2, 10, 0); }),
            ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace cpstop
