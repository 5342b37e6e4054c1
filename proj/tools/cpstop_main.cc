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

// Command-line driver for the experiment pipeline.
//
//   cpstop <gen|solve|train|calibrate|evaluate|report|coverage|checks|run>
//          --config experiment.json [--output-root DIR] [--workers N]
//
// Artifacts go to <output root>/<output_dir>; the output root defaults to
// $CPSTOP_OUTPUT_ROOT and then to the working directory. Exit status is 0 on
// success, 2 on invalid input and 3 when an upstream artifact is missing or
// was built under a different configuration.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "CLI11.hpp"
#include "cpstop/error.h"
#include "cpstop/pipeline.h"

namespace {

int ExitCodeFor(cpstop::ErrorCode code) {
  switch (code) {
    case cpstop::ErrorCode::kMissingUpstream:
    case cpstop::ErrorCode::kStaleArtifact:
      return 3;
    case cpstop::ErrorCode::kIoError:
    case cpstop::ErrorCode::kNonFiniteLoss:
      return 1;
    default:
      return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conformal early stopping for branch-and-bound"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string output_root;
  int workers = -1;
  std::string split = "all";
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--output-root", output_root,
                    "Root for run directories (default $CPSTOP_OUTPUT_ROOT or .)");
    sub->add_option("--workers", workers, "Worker threads (0 = all cores)")
        ->check(CLI::NonNegativeNumber);
  };

  const std::vector<std::pair<const char*, const char*>> commands{
      {"gen", "Generate the train, calibration and test instances"},
      {"solve", "Solve instances to proven optimality and write traces"},
      {"train", "Fit the gap predictor on the training traces"},
      {"calibrate", "Compute the stopping threshold on the calibration traces"},
      {"evaluate", "Replay the test traces under every stopping rule"},
      {"report", "Print and write the per-method summary table"},
      {"coverage", "Monte Carlo check of the coverage guarantee"},
      {"checks", "Ordering simulation, gradient check and bound calculators"},
      {"run", "gen, solve, train, calibrate, evaluate and report"},
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    subs[name] = app.add_subcommand(name, help);
    add_common(subs[name]);
  }
  subs["solve"]
      ->add_option("--split", split, "train, calibration, test, pool or all")
      ->check(CLI::IsMember({"train", "calibration", "test", "pool", "all"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int status = app.exit(e);
    return status == 0 ? 0 : 2;
  }

  try {
    cpstop::PipelineConfig config = cpstop::LoadPipelineConfig(config_path);
    if (workers >= 0) config.workers = workers;
    std::filesystem::path root = ".";
    if (!output_root.empty()) {
      root = output_root;
    } else if (const char* env = std::getenv("CPSTOP_OUTPUT_ROOT"); env && *env) {
      root = env;
    }
    cpstop::Pipeline pipeline(config, root);

    const std::string command = app.get_subcommands().front()->get_name();
    if (command == "gen") {
      pipeline.Gen();
    } else if (command == "solve") {
      if (split == "all") {
        for (auto set : {cpstop::DataSet::kTrain, cpstop::DataSet::kCalibration,
                         cpstop::DataSet::kTest}) {
          pipeline.Solve(set);
        }
      } else {
        pipeline.Solve(cpstop::ParseDataSet(split));
      }
    } else if (command == "train") {
      pipeline.Train();
    } else if (command == "calibrate") {
      pipeline.Calibrate();
    } else if (command == "evaluate") {
      pipeline.Evaluate();
    } else if (command == "report") {
      std::fputs(pipeline.Report().c_str(), stdout);
    } else if (command == "coverage") {
      const cpstop::CoverageResult r = pipeline.Coverage();
      std::printf("mean coverage %.4f ± %.4f (target %.4f, n = %d)\n",
                  r.mean_coverage, r.stderr_coverage, 1.0 - config.alpha, r.n);
    } else if (command == "checks") {
      std::printf("%s\n", pipeline.Checks().ToJson().dump(2).c_str());
    } else if (command == "run") {
      pipeline.RunAll();
    }
  } catch (const cpstop::Error& e) {
    std::fprintf(stderr, "cpstop: %s\n", e.what());
    return ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "cpstop: %s\n", e.what());
    return 1;
  }
  return 0;
}
