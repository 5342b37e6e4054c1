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

// End-to-end experiment driver: generate, solve, train, calibrate, evaluate
// and report, each step reading the previous step's artifacts from disk and
// checking that they were produced under the current configuration.

#ifndef CPSTOP_PIPELINE_H_
#define CPSTOP_PIPELINE_H_

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "cpstop/bnb.h"
#include "cpstop/gap_predictor.h"
#include "cpstop/instances.h"
#include "cpstop/io.h"

namespace spdlog {
class logger;
}

namespace cpstop {

struct CoverageConfig {
  int trials = 200;
  int c = 50;
  int pool_size = 300;
  std::uint64_t seed = 1;
};

struct PipelineConfig {
  Family family = Family::kKnapsack;
  FamilyParams params;
  int train_size = 200;
  int calibration_size = 50;
  int test_size = 50;
  std::uint64_t master_seed = 0;
  // Ground truth needs a proven optimum, so the solver runs with epsilon 0
  // unless the config asks otherwise.
  BnbConfig solver = [] {
    BnbConfig c;
    c.epsilon = 0.0;
    return c;
  }();
  TrainingConfig training;
  FeatureConfig features;
  double epsilon = 1e-3;
  double alpha = 0.1;
  double delta = 0.05;
  std::string output_dir = "run";
  int workers = 0;
  CoverageConfig coverage;

  // Throws kInvalidArgument.
  void Validate() const;
};

std::vector<std::string> DefaultThetaKeys(Family family);

// Unknown keys are rejected. Missing keys take the defaults above; missing
// feature theta_keys take DefaultThetaKeys(family).
PipelineConfig PipelineConfigFromJson(const Json& json);
Json PipelineConfigToJson(const PipelineConfig& config);
PipelineConfig LoadPipelineConfig(const std::filesystem::path& path);

// Directory sets under instances/ and traces/. The pool is drawn from the
// test distribution and feeds the coverage experiment.
enum class DataSet { kTrain, kCalibration, kTest, kPool };
std::string DataSetName(DataSet set);
DataSet ParseDataSet(const std::string& name);

struct ChecksResult {
  double lemma_probability = 0.0;
  double lemma_exact = 0.0;  // n / (c + 1).
  GradientCheckResult gradient;
  double expected_bound = 0.0;
  double success_bound = 0.0;
  Json ToJson() const;
};

class Pipeline {
 public:
  // The run directory is output_root / config.output_dir.
  Pipeline(PipelineConfig config, std::filesystem::path output_root);
  ~Pipeline();

  const PipelineConfig& config() const { return config_; }
  const std::filesystem::path& run_dir() const { return run_dir_; }

  void Gen();
  // Resumable: traces already on disk with the current hash are kept.
  void Solve(DataSet set);
  void Train();
  void Calibrate();
  void Evaluate();
  // Prints the per-method table and writes it as CSV.
  std::string Report();
  CoverageResult Coverage();
  ChecksResult Checks();
  // gen, solve (train, calibration, test), train, calibrate, evaluate, report.
  void RunAll();

  std::string InstancesHash(DataSet set) const;
  std::string TracesHash(DataSet set) const;
  std::string ModelHash() const;
  std::string CalibrationHash() const;
  std::string ReportHash() const;

  std::filesystem::path InstanceDir(DataSet set) const;
  std::filesystem::path TraceDir(DataSet set) const;
  std::filesystem::path ModelPath() const { return run_dir_ / "model.json"; }
  std::filesystem::path CalibrationPath() const {
    return run_dir_ / "calibration.json";
  }
  std::filesystem::path ReportPath() const { return run_dir_ / "report.json"; }

 private:
  struct LoadedSet;

  int SetSize(DataSet set) const;
  void GenerateSet(DataSet set);
  std::vector<MilpInstance> LoadInstances(DataSet set) const;
  LoadedSet LoadTraces(DataSet set) const;
  GapPredictorModel LoadModel() const;
  CalibrationResult LoadCalibration() const;
  std::vector<GapSeries> PredictAll(const GapPredictorModel& model,
                                    const LoadedSet& set) const;

  PipelineConfig config_;
  std::filesystem::path run_dir_;
  std::shared_ptr<spdlog::logger> log_;
};

}  // namespace cpstop

#endif  // CPSTOP_PIPELINE_H_
