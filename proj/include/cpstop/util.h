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

#ifndef CPSTOP_UTIL_H_
#define CPSTOP_UTIL_H_

#include <cstdint>
#include <functional>

namespace cpstop {

// SplitMix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t Mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Runs body(i) for i in [0, count) on up to `workers` threads (0 means the
// hardware concurrency). The first exception thrown by any call is rethrown
// after all workers have stopped.
void ParallelFor(std::int64_t count, int workers,
                 const std::function<void(std::int64_t)>& body);

}  // namespace cpstop

#endif  // CPSTOP_UTIL_H_
