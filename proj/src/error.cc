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

#include "cpstop/error.h"

namespace cpstop {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kUnknownFamily: return "UnknownFamily";
    case ErrorCode::kParamOutOfRange: return "ParamOutOfRange";
    case ErrorCode::kInvalidInstance: return "InvalidInstance";
    case ErrorCode::kTooLarge: return "TooLarge";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kZeroOptimum: return "ZeroOptimum";
    case ErrorCode::kInvalidInterval: return "InvalidInterval";
    case ErrorCode::kTickNotInTrace: return "TickNotInTrace";
    case ErrorCode::kMissingOptimum: return "MissingOptimum";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kSeriesMismatch: return "SeriesMismatch";
    case ErrorCode::kEmptyScores: return "EmptyScores";
    case ErrorCode::kInvalidDelta: return "InvalidDelta";
    case ErrorCode::kMissingPredictions: return "MissingPredictions";
    case ErrorCode::kKappaMismatch: return "KappaMismatch";
    case ErrorCode::kInsufficientPool: return "InsufficientPool";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kStaleArtifact: return "StaleArtifact";
    case ErrorCode::kMissingUpstream: return "MissingUpstream";
  }
  return "Unknown";
}

}  // namespace cpstop
