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

#include "cpstop/pipeline.h"

#include <gtest/gtest.h>

#include "cpstop/error.h"
#include "cpstop/io.h"
#include "test_util.h"

namespace cpstop {
namespace {

namespace fs = std::filesystem;

ErrorCode CodeOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

Json SmallConfigJson() {
  return Json::parse(R"({
    "family": "knapsack",
    "params": {"n": 12},
    "sizes": {"train": 12, "calibration": 8, "test": 8},
    "master_seed": 5,
    "training": {"epochs": 3, "hidden": [8], "max_samples_per_trace": 50},
    "features": {"windows": [2, 8]},
    "epsilon": 0.001,
    "alpha": 0.2,
    "output_dir": "small",
    "workers": 1,
    "coverage": {"trials": 20, "c": 8, "pool_size": 16, "seed": 3}
  })");
}

PipelineConfig SmallConfig() { return PipelineConfigFromJson(SmallConfigJson()); }

std::size_t CountFiles(const fs::path& dir, const std::string& ext) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ext) ++n;
  }
  return n;
}

TEST(PipelineConfigTest, ParsesAndRoundTrips) {
  const PipelineConfig c = SmallConfig();
  EXPECT_EQ(c.family, Family::kKnapsack);
  EXPECT_EQ(c.train_size, 12);
  EXPECT_EQ(c.solver.epsilon, 0.0);
  EXPECT_EQ(c.features.theta_keys, DefaultThetaKeys(Family::kKnapsack));
  EXPECT_EQ(c.training.hidden, (std::vector<int>{8}));
  const Json j = PipelineConfigToJson(c);
  EXPECT_EQ(PipelineConfigToJson(PipelineConfigFromJson(j)), j);
}

TEST(PipelineConfigTest, Validation) {
  Json j = SmallConfigJson();
  j["sizes"]["train"] = 0;
  EXPECT_EQ(CodeOf([&] { PipelineConfigFromJson(j); }), ErrorCode::kInvalidArgument);
  j = SmallConfigJson();
  j["colour"] = "blue";
  EXPECT_EQ(CodeOf([&] { PipelineConfigFromJson(j); }), ErrorCode::kInvalidArgument);
  j = SmallConfigJson();
  j["alpha"] = 1.5;
  EXPECT_EQ(CodeOf([&] { PipelineConfigFromJson(j); }), ErrorCode::kInvalidArgument);
  j = SmallConfigJson();
  j["coverage"]["pool_size"] = 4;
  EXPECT_EQ(CodeOf([&] { PipelineConfigFromJson(j); }), ErrorCode::kInvalidArgument);
  j = SmallConfigJson();
  j["params"]["n"] = 3;
  EXPECT_EQ(CodeOf([&] { PipelineConfigFromJson(j); }), ErrorCode::kParamOutOfRange);

  const fs::path dir = testing::ScratchDir("pipeline_config");
  WriteFile(dir / "broken.json", "{\"family\": ");
  EXPECT_EQ(CodeOf([&] { LoadPipelineConfig(dir / "broken.json"); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([&] { LoadPipelineConfig(dir / "absent.json"); }),
            ErrorCode::kIoError);
}

TEST(DataSetTest, Names) {
  for (DataSet s : {DataSet::kTrain, DataSet::kCalibration, DataSet::kTest,
                    DataSet::kPool}) {
    EXPECT_EQ(ParseDataSet(DataSetName(s)), s);
  }
  EXPECT_THROW(ParseDataSet("validation"), Error);
}

TEST(PipelineTest, GenIsIdempotent) {
  const fs::path root = testing::ScratchDir("pipeline_gen");
  Pipeline p(SmallConfig(), root);
  p.Gen();
  EXPECT_EQ(CountFiles(p.InstanceDir(DataSet::kTrain), ".json"), 13u);
  EXPECT_EQ(CountFiles(p.InstanceDir(DataSet::kTest), ".json"), 9u);
  const std::string manifest = ReadFile(p.InstanceDir(DataSet::kTrain) / "manifest.json");
  const std::string first = ReadFile(p.InstanceDir(DataSet::kTrain) /
                                     "knapsack-train-00000.json");
  const auto stamp = fs::last_write_time(p.InstanceDir(DataSet::kTrain) /
                                         "knapsack-train-00000.json");
  p.Gen();
  EXPECT_EQ(ReadFile(p.InstanceDir(DataSet::kTrain) / "manifest.json"), manifest);
  EXPECT_EQ(ReadFile(p.InstanceDir(DataSet::kTrain) / "knapsack-train-00000.json"),
            first);
  EXPECT_EQ(fs::last_write_time(p.InstanceDir(DataSet::kTrain) /
                                "knapsack-train-00000.json"),
            stamp);
}

TEST(PipelineTest, MissingUpstream) {
  const fs::path root = testing::ScratchDir("pipeline_missing");
  Pipeline p(SmallConfig(), root);
  EXPECT_EQ(CodeOf([&] { p.Solve(DataSet::kTrain); }), ErrorCode::kMissingUpstream);
  p.Gen();
  EXPECT_EQ(CodeOf([&] { p.Train(); }), ErrorCode::kMissingUpstream);
  p.Solve(DataSet::kTrain);
  p.Train();
  EXPECT_EQ(CodeOf([&] { p.Calibrate(); }), ErrorCode::kMissingUpstream);
  p.Solve(DataSet::kCalibration);
  p.Solve(DataSet::kTest);
  EXPECT_EQ(CodeOf([&] { p.Evaluate(); }), ErrorCode::kMissingUpstream);
  EXPECT_EQ(CodeOf([&] { p.Report(); }), ErrorCode::kMissingUpstream);
}

TEST(PipelineTest, EndToEnd) {
  const fs::path root = testing::ScratchDir("pipeline_e2e");
  Pipeline p(SmallConfig(), root);
  p.RunAll();
  for (const char* name : {"config.json", "model.json", "calibration.json",
                           "report.json", "report_table.csv", "per_instance.csv",
                           "solved_curve.csv", "loss_curve.csv", "run.log"}) {
    EXPECT_TRUE(fs::exists(p.run_dir() / name)) << name;
  }
  for (DataSet s : {DataSet::kTrain, DataSet::kCalibration, DataSet::kTest}) {
    for (const auto& e : fs::directory_iterator(p.TraceDir(s))) {
      const TraceFile f = TraceFromJsonl(ReadFile(e.path()));
      EXPECT_EQ(f.trace.status, SolveStatus::kOptimalWithinEps);
      EXPECT_TRUE(f.trace.z_star.has_value());
      EXPECT_EQ(f.config_hash, p.TracesHash(s));
    }
  }

  const std::string table = ReadFile(p.run_dir() / "report_table.csv");
  EXPECT_EQ(table.substr(0, table.find('\n')),
            "method,ticks,suboptimality,nodes,correct,speedup");
  EXPECT_NE(table.find("\ndeterministic_eps,"), std::string::npos);
  const std::string det_row = table.substr(table.find("\ndeterministic_eps,") + 1);
  EXPECT_NE(det_row.substr(0, det_row.find('\n')).find(",100.0%,"), std::string::npos);

  const Json report = ReadJson(p.ReportPath());
  EXPECT_EQ(report.at("config_hash"), p.ReportHash());
  EXPECT_EQ(report.at("methods").at("deterministic_eps").at("correct"), 1.0);
  EXPECT_GE(report.at("methods").at("cp").at("mean_speedup").get<double>(), 0.0);
  const Json cal = ReadJson(p.CalibrationPath());
  EXPECT_EQ(cal.at("c"), 8);
  EXPECT_EQ(cal.at("n"), QuantileIndex(8, 0.2));
  for (const Json& item : report.at("per_instance")) {
    EXPECT_LE(item.at("stop_tick").get<std::int64_t>(),
              item.at("deterministic_tick").get<std::int64_t>());
  }

  const std::string text = p.Report();
  EXPECT_NE(text.find("stop_at_3"), std::string::npos);

  const CoverageResult cov = p.Coverage();
  EXPECT_EQ(cov.covered.size(), 20u);
  EXPECT_EQ(cov.n, QuantileIndex(8, 0.2));
  EXPECT_TRUE(fs::exists(p.run_dir() / "coverage.json"));
  EXPECT_EQ(CountFiles(p.TraceDir(DataSet::kPool), ".jsonl"), 16u);
}

TEST(PipelineTest, SolveResumesAndRepairs) {
  const fs::path root = testing::ScratchDir("pipeline_resume");
  Pipeline p(SmallConfig(), root);
  p.Gen();
  p.Solve(DataSet::kTest);
  const fs::path victim = p.TraceDir(DataSet::kTest) / "knapsack-test-00002.jsonl";
  const fs::path other = p.TraceDir(DataSet::kTest) / "knapsack-test-00003.jsonl";
  const std::string good = ReadFile(victim);
  const auto other_stamp = fs::last_write_time(other);
  WriteFile(victim, good.substr(0, good.size() / 2));
  p.Solve(DataSet::kTest);
  EXPECT_EQ(ReadFile(victim), good);
  EXPECT_EQ(fs::last_write_time(other), other_stamp);
}

TEST(PipelineTest, StaleArtifactsAreRejected) {
  const fs::path root = testing::ScratchDir("pipeline_stale");
  {
    Pipeline p(SmallConfig(), root);
    p.RunAll();
  }
  Json j = SmallConfigJson();
  j["alpha"] = 0.3;
  Pipeline changed(PipelineConfigFromJson(j), root);
  EXPECT_EQ(CodeOf([&] { changed.Evaluate(); }), ErrorCode::kStaleArtifact);
  EXPECT_EQ(CodeOf([&] { changed.Report(); }), ErrorCode::kStaleArtifact);
  changed.Calibrate();
  changed.Evaluate();
  EXPECT_FALSE(changed.Report().empty());

  j = SmallConfigJson();
  j["master_seed"] = 6;
  Pipeline reseeded(PipelineConfigFromJson(j), root);
  EXPECT_EQ(CodeOf([&] { reseeded.Solve(DataSet::kTrain); }),
            ErrorCode::kStaleArtifact);

  j = SmallConfigJson();
  j["solver"] = Json{{"tick_limit", 5000}};
  Pipeline resolved(PipelineConfigFromJson(j), root);
  EXPECT_EQ(CodeOf([&] { resolved.Train(); }), ErrorCode::kStaleArtifact);
}

TEST(PipelineTest, ChecksReportFixedQuantities) {
  const fs::path root = testing::ScratchDir("pipeline_checks");
  Pipeline p(SmallConfig(), root);
  const ChecksResult r = p.Checks();
  EXPECT_NEAR(r.expected_bound, 0.35914, 1e-5);
  EXPECT_NEAR(r.success_bound, 0.81419, 1e-5);
  EXPECT_NEAR(r.lemma_probability, r.lemma_exact, 0.01);
  EXPECT_LT(r.gradient.max_relative_error, 1e-4);
  EXPECT_GT(r.gradient.checked, 0);
  EXPECT_TRUE(fs::exists(p.run_dir() / "checks.json"));
}

}  // namespace
}  // namespace cpstop
