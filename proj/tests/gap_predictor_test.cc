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

#include "cpstop/gap_predictor.h"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "cpstop/error.h"
#include "test_util.h"

namespace cpstop {
namespace {

using testing::MakeTrace;

FeatureConfig SmallFeatures() {
  FeatureConfig f;
  f.windows = {2, 4};
  f.theta_keys = {"size"};
  return f;
}

FeatureNorm IdentityNorm(const FeatureConfig& f) {
  const int dim = FeatureDimension(f);
  return {std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
}

GapPredictorModel ZeroModel(const FeatureConfig& f) {
  GapPredictorModel m = InitModel(f, IdentityNorm(f), {4}, 0);
  std::fill(m.net.params().begin(), m.net.params().end(), 0.0);
  return m;
}

// Two fabricated solves closing from opposite sides.
std::vector<TrainingTrace> ToyTraces() {
  std::vector<TrainingTrace> traces(2);
  traces[0].trace = MakeTrace({kInf, 20, 14, 12, 12, 11, 10, 10},
                              {2, 4, 6, 7, 8, 9, 9.5, 10}, 10);
  traces[0].theta = {{"size", 1}};
  traces[1].trace = MakeTrace({50, 48, 41, 41, 40, 40, 40, 40},
                              {30, 31, 33, 36, 37, 38, 39, 40}, 40);
  traces[1].theta = {{"size", 3}};
  return traces;
}

TEST(SquashTest, Examples) {
  EXPECT_EQ(Squash(0, 0, 2), 1.0);
  EXPECT_EQ(Squash(5, 3, 3), 0.0);
  EXPECT_EQ(Squash(-7, 3, 3), 0.0);
  const long double oracle = 1.0L / (1.0L + std::exp(-20.0L));
  EXPECT_NEAR(Squash(20, 0, 1), static_cast<double>(oracle), 1e-15);
  EXPECT_NEAR(Squash(20, 0, 1), 1.0, 1e-8);
}

TEST(SquashTest, StableAndSymmetric) {
  for (double x : {-1000.0, -50.0, -1.0, 0.3, 2.0, 50.0, 1000.0}) {
    const double v = Squash(x, -1, 4);
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 5.0);
    EXPECT_NEAR(Squash(x, -1, 4) + Squash(-x, -1, 4), 5.0, 1e-12);
  }
  double previous = -1;
  for (double x = -30; x <= 30; x += 0.5) {
    const double v = Squash(x, 0, 1);
    EXPECT_GT(v, previous);
    previous = v;
  }
}

TEST(SquashTest, InvalidInterval) {
  for (auto [l, u] : {std::pair{2.0, 1.0}, std::pair{0.0, kInf},
                      std::pair{-kInf, 0.0}}) {
    try {
      Squash(0, l, u);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kInvalidInterval);
    }
  }
}

TEST(FeaturizeTest, NamesMatchDimension) {
  const FeatureConfig f = SmallFeatures();
  EXPECT_EQ(FeatureNames(f).size(), static_cast<std::size_t>(FeatureDimension(f)));
  EXPECT_EQ(FeatureDimension(FeatureConfig{}), 11);
}

TEST(FeaturizeTest, ConstantTrace) {
  const FeatureConfig f = SmallFeatures();
  const BoundTrace t = MakeTrace({5, 5, 5, 5, 5}, {3, 3, 3, 3, 3});
  const std::vector<double> x = Featurize(t, 4, {{"size", 7}}, f);
  // upper, lower, (u2, l2), (u4, l4), tick, nodes, no_incumbent, theta.
  EXPECT_EQ(x, (std::vector<double>{5, 3, 5, 3, 5, 3, 4, 5, 0, 7}));
}

TEST(FeaturizeTest, WindowsUseAvailablePrefix) {
  const FeatureConfig f = SmallFeatures();
  const BoundTrace t = MakeTrace({9, 7, 5, 3}, {0, 1, 2, 3});
  const std::vector<double> at1 = Featurize(t, 1, {}, f);
  EXPECT_DOUBLE_EQ(at1[2], 8);  // (9 + 7) / 2
  EXPECT_DOUBLE_EQ(at1[4], 8);  // window 4 sees only ticks 0..1
  const std::vector<double> at3 = Featurize(t, 3, {}, f);
  EXPECT_DOUBLE_EQ(at3[2], 4);      // (5 + 3) / 2
  EXPECT_DOUBLE_EQ(at3[3], 2.5);    // (2 + 3) / 2
  EXPECT_DOUBLE_EQ(at3[4], 6);      // all four
  EXPECT_EQ(at3.back(), 0.0);       // missing theta key reads 0
}

TEST(FeaturizeTest, NoIncumbentSentinel) {
  const FeatureConfig f = SmallFeatures();
  const BoundTrace t = MakeTrace({kInf, 6}, {2, 3});
  const std::vector<double> x = Featurize(t, 0, {}, f);
  EXPECT_EQ(x[0], 4.0);  // root 2 + span 1 * max(1, 2)
  EXPECT_EQ(x[8], 1.0);
  for (double v : x) EXPECT_TRUE(std::isfinite(v));
  EXPECT_EQ(Featurize(t, 1, {}, f)[8], 0.0);
  EXPECT_THROW(Featurize(t, 5, {}, f), Error);
}

TEST(FeaturizeTest, NormApplied) {
  const FeatureConfig f = SmallFeatures();
  const BoundTrace t = MakeTrace({5}, {3});
  FeatureNorm norm = IdentityNorm(f);
  norm.mean[0] = 1;
  norm.stddev[0] = 2;
  EXPECT_EQ(Featurize(t, 0, {}, f, &norm)[0], 2.0);
}

TEST(PredictGapTest, Examples) {
  const FeatureConfig f = SmallFeatures();
  const GapPredictorModel zero = ZeroModel(f);
  const BoundTrace t = MakeTrace({10, 9, 9}, {8, 8, 9});
  EXPECT_DOUBLE_EQ(PredictGap(zero, t, {}, 0), 1.0);
  EXPECT_EQ(PredictGap(zero, t, {}, 2), 0.0);

  const std::vector<TrainingTrace> toy = ToyTraces();
  TrainingConfig cfg;
  cfg.epochs = 5;
  cfg.hidden = {8};
  const GapPredictorModel model = Train(toy, cfg, f);
  for (const TrainingTrace& tt : toy) {
    const GapSeries s = PredictSeries(model, tt.trace, tt.theta);
    for (std::size_t i = 0; i < s.size(); ++i) {
      const TraceSample& sample = tt.trace.samples[i];
      if (!std::isfinite(sample.upper)) continue;
      EXPECT_GE(s.values[i], 0.0);
      EXPECT_LE(s.values[i], sample.upper - sample.lower);
      EXPECT_EQ(s.values[i], PredictGap(model, tt.trace, tt.theta, sample.tick));
    }
    EXPECT_EQ(s.values.back(), 0.0);
  }
}

TEST(WeightsTest, Examples) {
  const std::vector<double> y{0.1, 0.2, 0.2};
  const std::vector<double> w = NormalizedWeights(y, 1e-6);
  EXPECT_NEAR(w[0], 0.5, 1e-15);
  EXPECT_NEAR(w[1], 0.25, 1e-15);
  EXPECT_NEAR(w[2], 0.25, 1e-15);
  EXPECT_EQ(SampleWeight(0.0, 1e-4), 1e4);
  EXPECT_EQ(NormalizedWeights(std::vector<double>{3.0}, 1e-4),
            (std::vector<double>{1.0}));
}

TEST(LossTest, MidpointPredictionIsExact) {
  const FeatureConfig f = SmallFeatures();
  const GapPredictorModel zero = ZeroModel(f);
  std::vector<TrainingTrace> one(1);
  one[0].trace = MakeTrace({10}, {8}, 9);
  EXPECT_EQ(EmpiricalLoss(zero, one, TrainingConfig{}), 0.0);
}

TEST(LossTest, WeightsSumToOnePerTrace) {
  const FeatureConfig f = SmallFeatures();
  const std::vector<TrainingTrace> toy = ToyTraces();
  const LossBatch batch =
      BuildLossBatch(toy, f, IdentityNorm(f), TrainingConfig{});
  EXPECT_EQ(batch.trace_count, 2);
  // The first trace has no incumbent at tick 0, so it contributes 7 samples.
  ASSERT_EQ(batch.samples.size(), 15u);
  double first = 0.0;
  double second = 0.0;
  for (std::size_t i = 0; i < batch.samples.size(); ++i) {
    (i < 7 ? first : second) += batch.samples[i].weight;
  }
  EXPECT_NEAR(first, 1.0, 1e-12);
  EXPECT_NEAR(second, 1.0, 1e-12);
  EXPECT_EQ(batch.samples[0].target, 10.0);
}

TEST(LossTest, MissingOptimum) {
  std::vector<TrainingTrace> t = ToyTraces();
  t[1].trace.z_star.reset();
  try {
    BuildLossBatch(t, SmallFeatures(), IdentityNorm(SmallFeatures()),
                   TrainingConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingOptimum);
  }
}

TEST(SamplingTest, StrideAndCap) {
  std::vector<double> u(101), l(101);
  for (int i = 0; i <= 100; ++i) {
    u[i] = 200 - i;
    l[i] = i;
  }
  std::vector<TrainingTrace> t(1);
  t[0].trace = MakeTrace(u, l, 100);
  const FeatureConfig f = SmallFeatures();
  TrainingConfig cfg;
  cfg.stride = 10;
  EXPECT_EQ(BuildLossBatch(t, f, IdentityNorm(f), cfg).samples.size(), 11u);
  cfg.stride = 1;
  cfg.max_samples_per_trace = 20;
  EXPECT_LE(BuildLossBatch(t, f, IdentityNorm(f), cfg).samples.size(), 21u);
}

TEST(TrainTest, OverfitsToyData) {
  const std::vector<TrainingTrace> toy = ToyTraces();
  TrainingConfig cfg;
  cfg.epochs = 2000;
  cfg.hidden = {16, 16};
  cfg.step_size = 1e-2;
  cfg.validation_fraction = 0.0;
  const GapPredictorModel model = Train(toy, cfg, SmallFeatures());
  ASSERT_EQ(model.train_loss.size(), 2001u);
  EXPECT_LT(*std::min_element(model.train_loss.begin(), model.train_loss.end()),
            1e-3 * model.train_loss.front());
  EXPECT_DOUBLE_EQ(EmpiricalLoss(model, toy, cfg),
                   *std::min_element(model.train_loss.begin(),
                                     model.train_loss.end()));
}

TEST(TrainTest, ZeroEpochsReturnsInitialization) {
  const std::vector<TrainingTrace> toy = ToyTraces();
  TrainingConfig cfg;
  cfg.epochs = 0;
  cfg.hidden = {8};
  const FeatureConfig f = SmallFeatures();
  const GapPredictorModel trained = Train(toy, cfg, f);
  const GapPredictorModel init =
      InitModel(f, FitFeatureNorm(toy, f, cfg), cfg.hidden, cfg.seed);
  EXPECT_TRUE(std::equal(trained.net.params().begin(),
                         trained.net.params().end(),
                         init.net.params().begin()));
  EXPECT_EQ(trained.train_loss.size(), 1u);
}

TEST(TrainTest, SameSeedSameBytes) {
  const std::vector<TrainingTrace> toy = ToyTraces();
  TrainingConfig cfg;
  cfg.epochs = 30;
  cfg.batch_size = 4;
  cfg.hidden = {8};
  const GapPredictorModel a = Train(toy, cfg, SmallFeatures());
  const GapPredictorModel b = Train(toy, cfg, SmallFeatures());
  ASSERT_EQ(a.net.num_params(), b.net.num_params());
  EXPECT_EQ(std::memcmp(a.net.params().data(), b.net.params().data(),
                        a.net.num_params() * sizeof(double)),
            0);
  cfg.seed = 1;
  const GapPredictorModel c = Train(toy, cfg, SmallFeatures());
  EXPECT_NE(std::memcmp(a.net.params().data(), c.net.params().data(),
                        a.net.num_params() * sizeof(double)),
            0);
}

TEST(TrainTest, Errors) {
  TrainingConfig cfg;
  EXPECT_THROW(Train({}, cfg, SmallFeatures()), Error);
  cfg.step_size = 0;
  EXPECT_THROW(cfg.Validate(), Error);
  cfg = TrainingConfig{};
  cfg.weight_floor = 0;
  EXPECT_THROW(cfg.Validate(), Error);
  cfg = TrainingConfig{};
  cfg.stride = 0;
  EXPECT_THROW(cfg.Validate(), Error);
}

TEST(GradientCheckTest, FreshModel) {
  const FeatureConfig f = SmallFeatures();
  const std::vector<TrainingTrace> toy = ToyTraces();
  const TrainingConfig cfg;
  const FeatureNorm norm = FitFeatureNorm(toy, f, cfg);
  const LossBatch batch = BuildLossBatch(toy, f, norm, cfg);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const GapPredictorModel model = InitModel(f, norm, {16, 16}, seed);
    const GradientCheckResult r = GradientCheck(model, batch, 64, seed);
    EXPECT_GT(r.checked, 0);
    EXPECT_LT(r.max_relative_error, 1e-4);
  }
}

TEST(GradientCheckTest, AllZeroWeights) {
  const FeatureConfig f = SmallFeatures();
  const std::vector<TrainingTrace> toy = ToyTraces();
  const TrainingConfig cfg;
  const FeatureNorm norm = FitFeatureNorm(toy, f, cfg);
  const LossBatch batch = BuildLossBatch(toy, f, norm, cfg);
  GapPredictorModel model = InitModel(f, norm, {8}, 0);
  std::fill(model.net.params().begin(), model.net.params().end(), 0.0);
  const GradientCheckResult r =
      GradientCheck(model, batch, static_cast<int>(model.net.num_params()));
  EXPECT_GT(r.checked, 0);
  EXPECT_LT(r.max_relative_error, 1e-4);
}

TEST(GradientCheckTest, EmptySubsetRejected) {
  const FeatureConfig f = SmallFeatures();
  const std::vector<TrainingTrace> toy = ToyTraces();
  const TrainingConfig cfg;
  const FeatureNorm norm = FitFeatureNorm(toy, f, cfg);
  const LossBatch batch = BuildLossBatch(toy, f, norm, cfg);
  const GapPredictorModel model = InitModel(f, norm, {8}, 0);
  try {
    GradientCheck(model, batch, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
}

}  // namespace
}  // namespace cpstop
