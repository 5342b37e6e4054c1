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

#include "cpstop/io.h"

#include <gtest/gtest.h>

#include <cmath>

#include "cpstop/error.h"
#include "test_util.h"

namespace cpstop {
namespace {

ErrorCode CodeOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

BoundTrace SolvedTrace() {
  BnbConfig exact;
  exact.epsilon = 0.0;
  const InstanceSet set =
      GenerateFamily(Family::kKnapsack, {{"n", 14}}, 3, 1, Split::kTrain);
  return Solve(set.instances[0], exact).trace;
}

TEST(NumberJsonTest, Sentinels) {
  EXPECT_EQ(NumberToJson(kInf), Json("inf"));
  EXPECT_EQ(NumberToJson(-kInf), Json("-inf"));
  EXPECT_EQ(NumberToJson(1.5), Json(1.5));
  EXPECT_EQ(NumberFromJson(Json("inf")), kInf);
  EXPECT_EQ(NumberFromJson(Json("-inf")), -kInf);
  EXPECT_TRUE(std::isnan(NumberFromJson(Json("nan"))));
  EXPECT_EQ(NumberFromJson(Json(0.1)), 0.1);
  EXPECT_EQ(CodeOf([] { NumberFromJson(Json("infinity")); }),
            ErrorCode::kParseError);
}

TEST(InstanceJsonTest, RoundTrip) {
  for (Family f : {Family::kKnapsack, Family::kSetCover, Family::kCflpSmall}) {
    const MilpInstance m = GenerateFamily(f, {}, 5, 1, Split::kTest).instances[0];
    const Json j = InstanceToJson(m);
    const MilpInstance back = InstanceFromJson(Json::parse(j.dump()));
    EXPECT_EQ(InstanceToJson(back).dump(), j.dump());
    EXPECT_EQ(back.objective, m.objective);
    EXPECT_EQ(back.con_matrix, m.con_matrix);
    EXPECT_EQ(back.con_sense, m.con_sense);
    EXPECT_EQ(back.is_integer, m.is_integer);
    EXPECT_EQ(back.theta_seed, m.theta_seed);
    EXPECT_EQ(back.theta_params, m.theta_params);
  }
}

TEST(InstanceJsonTest, RejectsInvalid) {
  Json j = InstanceToJson(
      GenerateFamily(Family::kKnapsack, {}, 5, 1, Split::kTest).instances[0]);
  j["con_rhs"] = Json::array();
  EXPECT_THROW(InstanceFromJson(j), Error);
}

TEST(TraceJsonlTest, RoundTrip) {
  const BoundTrace t = SolvedTrace();
  const std::string text = TraceToJsonl(t, "abc123");
  const TraceFile back = TraceFromJsonl(text);
  EXPECT_EQ(back.config_hash, "abc123");
  EXPECT_EQ(back.trace.instance_id, t.instance_id);
  EXPECT_EQ(back.trace.status, t.status);
  EXPECT_EQ(back.trace.z_star, t.z_star);
  ASSERT_EQ(back.trace.samples.size(), t.samples.size());
  for (std::size_t i = 0; i < t.samples.size(); ++i) {
    EXPECT_EQ(back.trace.samples[i].tick, t.samples[i].tick);
    EXPECT_EQ(back.trace.samples[i].upper, t.samples[i].upper);
    EXPECT_EQ(back.trace.samples[i].lower, t.samples[i].lower);
    EXPECT_EQ(back.trace.samples[i].nodes_explored, t.samples[i].nodes_explored);
    EXPECT_EQ(back.trace.samples[i].incumbent_id, t.samples[i].incumbent_id);
  }
  ASSERT_EQ(back.trace.incumbents.size(), t.incumbents.size());
  EXPECT_EQ(back.trace.incumbents.back().solution, t.incumbents.back().solution);
  EXPECT_EQ(TraceToJsonl(back.trace, "abc123"), text);
}

TEST(TraceJsonlTest, InfiniteBoundsAndMissingOptimum) {
  BoundTrace t = testing::MakeTrace({kInf, 5}, {-kInf, 2});
  t.status = SolveStatus::kTickLimit;
  const TraceFile back = TraceFromJsonl(TraceToJsonl(t, "h"));
  EXPECT_EQ(back.trace.samples[0].upper, kInf);
  EXPECT_EQ(back.trace.samples[0].lower, -kInf);
  EXPECT_FALSE(back.trace.z_star.has_value());
}

TEST(TraceJsonlTest, RejectsDamagedFiles) {
  const std::string text = TraceToJsonl(SolvedTrace(), "h");
  // Cut mid-line, drop a full line, garble, or empty.
  EXPECT_EQ(CodeOf([&] { TraceFromJsonl(text.substr(0, text.size() / 2)); }),
            ErrorCode::kParseError);
  const std::size_t last_line = text.rfind('\n', text.size() - 2);
  EXPECT_EQ(CodeOf([&] { TraceFromJsonl(text.substr(0, last_line + 1)); }),
            ErrorCode::kParseError);
  EXPECT_EQ(CodeOf([] { TraceFromJsonl("{not json}\n"); }), ErrorCode::kParseError);
  EXPECT_EQ(CodeOf([] { TraceFromJsonl(""); }), ErrorCode::kParseError);
}

TEST(ConfigJsonTest, RoundTripsAndRejectsUnknownKeys) {
  BnbConfig b;
  b.epsilon = 0.0;
  b.tick_limit = 77;
  b.node_selection = NodeSelection::kDepthFirst;
  b.rounding_heuristic_enabled = false;
  const BnbConfig b2 = BnbConfigFromJson(BnbConfigToJson(b));
  EXPECT_EQ(BnbConfigToJson(b2), BnbConfigToJson(b));
  EXPECT_EQ(b2.tick_limit, 77);
  EXPECT_EQ(b2.node_selection, NodeSelection::kDepthFirst);

  TrainingConfig t;
  t.hidden = {3, 5};
  t.max_samples_per_trace = 12;
  t.seed = 9;
  EXPECT_EQ(TrainingConfigToJson(TrainingConfigFromJson(TrainingConfigToJson(t))),
            TrainingConfigToJson(t));

  FeatureConfig f;
  f.windows = {1, 7};
  f.theta_keys = {"a", "b"};
  EXPECT_EQ(FeatureConfigToJson(FeatureConfigFromJson(FeatureConfigToJson(f))),
            FeatureConfigToJson(f));

  Json bad = BnbConfigToJson(b);
  bad["surprise"] = 1;
  EXPECT_EQ(CodeOf([&] { BnbConfigFromJson(bad); }), ErrorCode::kInvalidArgument);
  bad = TrainingConfigToJson(t);
  bad["surprise"] = 1;
  EXPECT_EQ(CodeOf([&] { TrainingConfigFromJson(bad); }), ErrorCode::kInvalidArgument);
  bad = FeatureConfigToJson(f);
  bad["surprise"] = 1;
  EXPECT_EQ(CodeOf([&] { FeatureConfigFromJson(bad); }), ErrorCode::kInvalidArgument);
}

TEST(ModelJsonTest, RoundTripPreservesPredictions) {
  std::vector<TrainingTrace> data(1);
  data[0].trace = SolvedTrace();
  TrainingConfig cfg;
  cfg.epochs = 3;
  cfg.hidden = {6, 4};
  FeatureConfig f;
  f.theta_keys = {"capacity_ratio"};
  const GapPredictorModel model = Train(data, cfg, f);
  const Json j = ModelToJson(model);
  const GapPredictorModel back = ModelFromJson(Json::parse(j.dump()));
  EXPECT_EQ(ModelToJson(back).dump(), j.dump());
  EXPECT_EQ(PredictSeries(back, data[0].trace, {}).values,
            PredictSeries(model, data[0].trace, {}).values);

  Json broken = j;
  broken["layer_sizes"][1] = 7;
  EXPECT_THROW(ModelFromJson(broken), Error);
}

TEST(CalibrationJsonTest, RoundTrip) {
  const std::vector<double> scores{0.5, 0.2, 0.9, 0.1};
  CalibrationResult c = Calibrate(scores, 4, 0.25, 1e-3);
  c.config_hash = "deadbeef";
  c.dropped_count = 1;
  c.replay = ReplayStats{0.01, 2, 30.5, 0.4, 90};
  const CalibrationResult back =
      CalibrationFromJson(Json::parse(CalibrationToJson(c).dump()));
  EXPECT_EQ(back.kappa, c.kappa);
  EXPECT_EQ(back.n, 3);
  EXPECT_EQ(back.scores, scores);
  EXPECT_EQ(back.dropped_count, 1);
  ASSERT_TRUE(back.replay.has_value());
  EXPECT_EQ(back.replay->infinite_count, 2);
  EXPECT_EQ(back.replay->max_stop_tick, 90);
  EXPECT_EQ(CalibrationToJson(back), CalibrationToJson(c));
}

TEST(HashTest, KnownDigests) {
  EXPECT_EQ(Sha256Hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(Sha256Hex(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(HashJson(Json{{"b", 1}, {"a", 2}}), HashJson(Json{{"a", 2}, {"b", 1}}));
  EXPECT_NE(HashJson(Json{{"a", 1}}), HashJson(Json{{"a", 2}}));
}

TEST(FileTest, WriteReadAndErrors) {
  const auto dir = testing::ScratchDir("io_test");
  WriteFile(dir / "nested" / "x.txt", "hello\n");
  EXPECT_EQ(ReadFile(dir / "nested" / "x.txt"), "hello\n");
  EXPECT_FALSE(std::filesystem::exists(dir / "nested" / "x.txt.tmp"));
  WriteJson(dir / "j.json", Json{{"k", 1}});
  EXPECT_EQ(ReadJson(dir / "j.json"), (Json{{"k", 1}}));
  EXPECT_EQ(CodeOf([&] { ReadFile(dir / "missing"); }), ErrorCode::kIoError);
  WriteFile(dir / "bad.json", "{");
  EXPECT_EQ(CodeOf([&] { ReadJson(dir / "bad.json"); }), ErrorCode::kParseError);
}

}  // namespace
}  // namespace cpstop
