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

// JSON and JSONL encodings of instances, traces and pipeline artifacts, plus
// the hashing and file helpers the pipeline builds on. Infinite values are
// written as the strings "inf" and "-inf".

#ifndef CPSTOP_IO_H_
#define CPSTOP_IO_H_

#include <filesystem>
#include <string>
#include <string_view>

#include "cpstop/bnb.h"
#include "cpstop/conformal.h"
#include "cpstop/evaluation.h"
#include "cpstop/gap_predictor.h"
#include "cpstop/instances.h"
#include "json.hpp"

namespace cpstop {

using Json = nlohmann::json;

Json NumberToJson(double value);
double NumberFromJson(const Json& value);

Json InstanceToJson(const MilpInstance& instance);
MilpInstance InstanceFromJson(const Json& json);

struct TraceFile {
  BoundTrace trace;
  std::string config_hash;
};

// Header line, then one sample per line.
std::string TraceToJsonl(const BoundTrace& trace, const std::string& config_hash);
// Throws kParseError on malformed or truncated input.
TraceFile TraceFromJsonl(std::string_view text);

Json BnbConfigToJson(const BnbConfig& config);
BnbConfig BnbConfigFromJson(const Json& json);
Json TrainingConfigToJson(const TrainingConfig& config);
TrainingConfig TrainingConfigFromJson(const Json& json);
Json FeatureConfigToJson(const FeatureConfig& config);
FeatureConfig FeatureConfigFromJson(const Json& json);

Json ModelToJson(const GapPredictorModel& model);
GapPredictorModel ModelFromJson(const Json& json);

Json CalibrationToJson(const CalibrationResult& calibration);
CalibrationResult CalibrationFromJson(const Json& json);

Json ReportToJson(const EvaluationReport& report);

Json CoverageToJson(const CoverageResult& coverage);

// Lowercase hex SHA-256.
std::string Sha256Hex(std::string_view data);
// SHA-256 of the compact dump; keys are sorted, so the hash is canonical.
std::string HashJson(const Json& json);

// Throws kIoError.
std::string ReadFile(const std::filesystem::path& path);
// Writes through a temporary file and renames it into place.
void WriteFile(const std::filesystem::path& path, std::string_view content);
// Throws kParseError / kIoError.
Json ReadJson(const std::filesystem::path& path);
// Pretty-printed with a trailing newline.
void WriteJson(const std::filesystem::path& path, const Json& json);

}  // namespace cpstop

#endif  // CPSTOP_IO_H_
