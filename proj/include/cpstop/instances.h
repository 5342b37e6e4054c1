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

// MILP data model, seeded parametric instance families and a brute-force
// optimum oracle for instances with few integer variables.

#ifndef CPSTOP_INSTANCES_H_
#define CPSTOP_INSTANCES_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cpstop {

enum class Family { kKnapsack, kSetCover, kCflpSmall };
enum class Sense { kLe, kGe, kEq };
enum class Split { kTrain, kCalibration, kTest };

using ThetaParams = std::map<std::string, double>;
using FamilyParams = std::map<std::string, double>;

std::string_view FamilyName(Family family);
Family ParseFamily(std::string_view name);
std::string_view SplitName(Split split);
Split ParseSplit(std::string_view name);

// minimize objective^T x  s.t.  con_matrix x (sense) con_rhs,
//                               var_lower <= x <= var_upper,
//                               x_j integer where is_integer[j].
struct MilpInstance {
  std::string id;
  Family family = Family::kKnapsack;
  int num_vars = 0;
  int num_cons = 0;
  std::vector<double> objective;
  std::vector<double> con_matrix;  // num_cons x num_vars, row-major.
  std::vector<double> con_rhs;
  std::vector<Sense> con_sense;
  std::vector<double> var_lower;
  std::vector<double> var_upper;
  std::vector<bool> is_integer;
  std::uint64_t theta_seed = 0;
  ThetaParams theta_params;

  std::span<const double> Row(int r) const {
    return {con_matrix.data() + static_cast<std::size_t>(r) * num_vars,
            static_cast<std::size_t>(num_vars)};
  }
  int NumIntegerVars() const;
  bool HasContinuousVars() const;
};

// Throws kInvalidInstance when the shape or bound invariants are violated.
void ValidateInstance(const MilpInstance& instance);

struct InstanceSet {
  Split split = Split::kTrain;
  Family family = Family::kKnapsack;
  FamilyParams params;
  std::uint64_t master_seed = 0;
  std::vector<MilpInstance> instances;
};

// Documented defaults for every family. Keys not listed here are rejected by
// GenerateFamily.
//
// knapsack:   n (items, 10..60), m (constraints, 1..5), max_weight (1..1000),
//             correlation (0 uncorrelated, 1 weakly, 2 strongly),
//             capacity_ratio_min / capacity_ratio_max (0.05..0.95).
// set_cover:  universe (2..80), sets (2..120), density (0.01..1),
//             max_cost (1..1000).
// cflp_small: facilities (2..8), customers (1..20),
//             capacity_slack (1..5), max_fixed_cost (1..10000),
//             max_unit_cost (1..1000).
FamilyParams DefaultParams(Family family);

// Merges `params` over the defaults and range-checks every entry.
FamilyParams ResolveParams(Family family, const FamilyParams& params);

// Per-instance seed. For a fixed master seed the map (split, index) -> seed is
// injective, so the three split streams never share an instance.
std::uint64_t DeriveThetaSeed(std::uint64_t master_seed, Split split,
                              int index);

InstanceSet GenerateFamily(Family family, const FamilyParams& params,
                           std::uint64_t master_seed, int count, Split split);

MilpInstance GenerateInstance(Family family, const FamilyParams& resolved,
                              std::uint64_t theta_seed, std::string id);

// Knapsack as minimization of -values^T x over binary x with one <= row per
// entry of `capacities`.
MilpInstance MakeKnapsack(std::string id, std::span<const double> values,
                          const std::vector<std::vector<double>>& weights,
                          std::span<const double> capacities);

struct BruteForceResult {
  double z_star = 0.0;
  std::vector<double> x_star;
};

inline constexpr int kBruteForceMaxIntegers = 20;

// Exact optimum by enumerating every assignment of the integer variables.
// Continuous variables are resolved by an LP per assignment.
// Throws kTooLarge (more than kBruteForceMaxIntegers integers or unbounded
// integer domain) and kInfeasible.
BruteForceResult BruteForceSolve(const MilpInstance& instance);

}  // namespace cpstop

#endif  // CPSTOP_INSTANCES_H_
