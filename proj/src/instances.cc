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

#include "cpstop/instances.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <utility>

#include "cpstop/error.h"
#include "cpstop/lp.h"
#include "cpstop/util.h"

namespace cpstop {
namespace {

struct ParamRange {
  double lo;
  double hi;
  bool integral;
};

const std::map<std::string, ParamRange>& Ranges(Family family) {
  static const std::map<std::string, ParamRange> kKnapsack = {
      {"n", {10, 60, true}},
      {"m", {1, 5, true}},
      {"max_weight", {1, 1000, true}},
      {"correlation", {0, 2, true}},
      {"capacity_ratio_min", {0.05, 0.95, false}},
      {"capacity_ratio_max", {0.05, 0.95, false}},
  };
  static const std::map<std::string, ParamRange> kSetCover = {
      {"universe", {2, 80, true}},
      {"sets", {2, 120, true}},
      {"density", {0.01, 1.0, false}},
      {"max_cost", {1, 1000, true}},
  };
  static const std::map<std::string, ParamRange> kCflp = {
      {"facilities", {2, 8, true}},
      {"customers", {1, 20, true}},
      {"capacity_slack", {1.0, 5.0, false}},
      {"max_fixed_cost", {1, 10000, true}},
      {"max_unit_cost", {1, 1000, true}},
  };
  switch (family) {
    case Family::kKnapsack: return kKnapsack;
    case Family::kSetCover: return kSetCover;
    case Family::kCflpSmall: return kCflp;
  }
  throw Error(ErrorCode::kUnknownFamily, "unhandled family");
}

int IntParam(const FamilyParams& p, const char* key) {
  return static_cast<int>(std::lround(p.at(key)));
}

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : engine_(seed) {}

  int Int(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(engine_);
  }
  double Real(double lo, double hi) {
    if (lo == hi) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  bool Bernoulli(double p) { return Real(0.0, 1.0) < p; }

 private:
  std::mt19937_64 engine_;
};

struct Builder {
  MilpInstance instance;

  int AddVar(double cost, double lo, double hi, bool integer) {
    instance.objective.push_back(cost);
    instance.var_lower.push_back(lo);
    instance.var_upper.push_back(hi);
    instance.is_integer.push_back(integer);
    return instance.num_vars++;
  }

  void AddRow(const std::vector<std::pair<int, double>>& terms, Sense sense,
              double rhs) {
    rows.push_back(terms);
    instance.con_sense.push_back(sense);
    instance.con_rhs.push_back(rhs);
    ++instance.num_cons;
  }

  MilpInstance Finish() {
    instance.con_matrix.assign(
        static_cast<std::size_t>(instance.num_cons) * instance.num_vars, 0.0);
    for (int r = 0; r < instance.num_cons; ++r) {
      for (const auto& [col, value] : rows[r]) {
        instance.con_matrix[static_cast<std::size_t>(r) * instance.num_vars +
                            col] += value;
      }
    }
    ValidateInstance(instance);
    return std::move(instance);
  }

  std::vector<std::vector<std::pair<int, double>>> rows;
};

MilpInstance GenerateKnapsack(const FamilyParams& p, Sampler& rng) {
  const int n = IntParam(p, "n");
  const int m = IntParam(p, "m");
  const int max_weight = IntParam(p, "max_weight");
  const int correlation = IntParam(p, "correlation");
  const double ratio =
      rng.Real(p.at("capacity_ratio_min"), p.at("capacity_ratio_max"));

  std::vector<std::vector<double>> weights(m, std::vector<double>(n));
  for (auto& row : weights) {
    for (double& w : row) w = rng.Int(1, max_weight);
  }
  const int spread = std::max(1, max_weight / 10);
  std::vector<double> values(n);
  for (int i = 0; i < n; ++i) {
    switch (correlation) {
      case 0: values[i] = rng.Int(1, max_weight); break;
      case 1:
        values[i] =
            std::max(1.0, weights[0][i] + rng.Int(-spread, spread));
        break;
      default: values[i] = weights[0][i] + spread; break;
    }
  }
  std::vector<double> capacities(m);
  double total_weight = 0.0;
  for (int k = 0; k < m; ++k) {
    double sum = 0.0;
    for (double w : weights[k]) sum += w;
    total_weight += sum;
    capacities[k] = std::floor(ratio * sum);
  }
  MilpInstance instance = MakeKnapsack("", values, weights, capacities);
  double total_value = 0.0;
  for (double v : values) total_value += v;
  instance.theta_params = {{"capacity_ratio", ratio},
                           {"total_value", total_value},
                           {"total_weight", total_weight}};
  return instance;
}

MilpInstance GenerateSetCover(const FamilyParams& p, Sampler& rng) {
  const int universe = IntParam(p, "universe");
  const int sets = IntParam(p, "sets");
  const double density = p.at("density");
  const int max_cost = IntParam(p, "max_cost");

  std::vector<std::vector<bool>> member(sets, std::vector<bool>(universe));
  for (auto& s : member) {
    for (int e = 0; e < universe; ++e) s[e] = rng.Bernoulli(density);
  }
  for (int e = 0; e < universe; ++e) {
    bool covered = false;
    for (const auto& s : member) covered = covered || s[e];
    if (!covered) member[rng.Int(0, sets - 1)][e] = true;
  }

  Builder b;
  b.instance.family = Family::kSetCover;
  double total_cost = 0.0;
  for (int s = 0; s < sets; ++s) {
    const double cost = rng.Int(1, max_cost);
    total_cost += cost;
    b.AddVar(cost, 0.0, 1.0, true);
  }
  double memberships = 0.0;
  for (int e = 0; e < universe; ++e) {
    std::vector<std::pair<int, double>> terms;
    for (int s = 0; s < sets; ++s) {
      if (member[s][e]) terms.emplace_back(s, 1.0);
    }
    memberships += static_cast<double>(terms.size());
    b.AddRow(terms, Sense::kGe, 1.0);
  }
  b.instance.theta_params = {
      {"mean_cost", total_cost / sets},
      {"realized_density", memberships / (static_cast<double>(sets) * universe)}};
  return b.Finish();
}

MilpInstance GenerateCflp(const FamilyParams& p, Sampler& rng) {
  const int facilities = IntParam(p, "facilities");
  const int customers = IntParam(p, "customers");
  const double slack = p.at("capacity_slack");
  const int max_fixed = IntParam(p, "max_fixed_cost");
  const int max_unit = IntParam(p, "max_unit_cost");

  std::vector<std::pair<double, double>> fac_loc(facilities);
  std::vector<std::pair<double, double>> cus_loc(customers);
  for (auto& [x, y] : fac_loc) { x = rng.Real(0, 1); y = rng.Real(0, 1); }
  for (auto& [x, y] : cus_loc) { x = rng.Real(0, 1); y = rng.Real(0, 1); }
  std::vector<double> demand(customers);
  double total_demand = 0.0;
  for (double& d : demand) {
    d = rng.Int(5, 35);
    total_demand += d;
  }
  std::vector<double> capacity(facilities);
  double total_capacity = 0.0;
  for (double& s : capacity) {
    s = rng.Int(10, 160);
    total_capacity += s;
  }
  if (total_capacity < slack * total_demand) {
    const double scale = slack * total_demand / total_capacity;
    total_capacity = 0.0;
    for (double& s : capacity) {
      s = std::ceil(s * scale);
      total_capacity += s;
    }
  }
  // Every single facility must be able to serve the largest customer,
  // otherwise the linking rows make some assignments structurally void.
  const double max_demand = *std::max_element(demand.begin(), demand.end());
  total_capacity = 0.0;
  for (double& s : capacity) {
    s = std::max(s, max_demand);
    total_capacity += s;
  }

  Builder b;
  b.instance.family = Family::kCflpSmall;
  double total_fixed = 0.0;
  for (int i = 0; i < facilities; ++i) {
    const double fixed = rng.Int(1, max_fixed);
    total_fixed += fixed;
    b.AddVar(fixed, 0.0, 1.0, true);
  }
  for (int i = 0; i < facilities; ++i) {
    for (int j = 0; j < customers; ++j) {
      const double dx = fac_loc[i].first - cus_loc[j].first;
      const double dy = fac_loc[i].second - cus_loc[j].second;
      const double unit =
          1.0 + std::round(max_unit * std::sqrt(dx * dx + dy * dy) /
                           std::sqrt(2.0));
      b.AddVar(unit * demand[j], 0.0, 1.0, false);
    }
  }
  auto y = [&](int i, int j) { return facilities + i * customers + j; };
  for (int j = 0; j < customers; ++j) {
    std::vector<std::pair<int, double>> terms;
    for (int i = 0; i < facilities; ++i) terms.emplace_back(y(i, j), 1.0);
    b.AddRow(terms, Sense::kEq, 1.0);
  }
  for (int i = 0; i < facilities; ++i) {
    std::vector<std::pair<int, double>> terms;
    for (int j = 0; j < customers; ++j) terms.emplace_back(y(i, j), demand[j]);
    terms.emplace_back(i, -capacity[i]);
    b.AddRow(terms, Sense::kLe, 0.0);
  }
  for (int i = 0; i < facilities; ++i) {
    for (int j = 0; j < customers; ++j) {
      b.AddRow({{y(i, j), 1.0}, {i, -1.0}}, Sense::kLe, 0.0);
    }
  }
  std::vector<std::pair<int, double>> aggregate;
  for (int i = 0; i < facilities; ++i) aggregate.emplace_back(i, capacity[i]);
  b.AddRow(aggregate, Sense::kGe, total_demand);

  b.instance.theta_params = {{"total_demand", total_demand},
                             {"total_capacity", total_capacity},
                             {"mean_fixed_cost", total_fixed / facilities}};
  return b.Finish();
}

}  // namespace

std::string_view FamilyName(Family family) {
  switch (family) {
    case Family::kKnapsack: return "knapsack";
    case Family::kSetCover: return "set_cover";
    case Family::kCflpSmall: return "cflp_small";
  }
  return "unknown";
}

Family ParseFamily(std::string_view name) {
  if (name == "knapsack") return Family::kKnapsack;
  if (name == "set_cover") return Family::kSetCover;
  if (name == "cflp_small") return Family::kCflpSmall;
  throw Error(ErrorCode::kUnknownFamily, std::string(name));
}

std::string_view SplitName(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kCalibration: return "calibration";
    case Split::kTest: return "test";
  }
  return "unknown";
}

Split ParseSplit(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "calibration") return Split::kCalibration;
  if (name == "test") return Split::kTest;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown split '" + std::string(name) + "'");
}

int MilpInstance::NumIntegerVars() const {
  return static_cast<int>(std::count(is_integer.begin(), is_integer.end(), true));
}

bool MilpInstance::HasContinuousVars() const {
  return NumIntegerVars() < num_vars;
}

void ValidateInstance(const MilpInstance& instance) {
  const auto n = static_cast<std::size_t>(instance.num_vars);
  const auto m = static_cast<std::size_t>(instance.num_cons);
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::kInvalidInstance, instance.id + ": " + what);
  };
  if (instance.num_vars < 0 || instance.num_cons < 0) fail("negative size");
  if (instance.objective.size() != n) fail("objective length");
  if (instance.var_lower.size() != n || instance.var_upper.size() != n) {
    fail("bound length");
  }
  if (instance.is_integer.size() != n) fail("integrality mask length");
  if (instance.con_matrix.size() != n * m) fail("matrix shape");
  if (instance.con_rhs.size() != m || instance.con_sense.size() != m) {
    fail("row length");
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!(instance.var_lower[j] <= instance.var_upper[j])) {
      fail("var_lower > var_upper at column " + std::to_string(j));
    }
  }
}

FamilyParams DefaultParams(Family family) {
  switch (family) {
    case Family::kKnapsack:
      return {{"n", 20},
              {"m", 1},
              {"max_weight", 100},
              {"correlation", 2},
              {"capacity_ratio_min", 0.3},
              {"capacity_ratio_max", 0.6}};
    case Family::kSetCover:
      return {{"universe", 30}, {"sets", 40}, {"density", 0.1},
              {"max_cost", 100}};
    case Family::kCflpSmall:
      return {{"facilities", 6},
              {"customers", 12},
              {"capacity_slack", 2.0},
              {"max_fixed_cost", 2000},
              {"max_unit_cost", 40}};
  }
  throw Error(ErrorCode::kUnknownFamily, "unhandled family");
}

FamilyParams ResolveParams(Family family, const FamilyParams& params) {
  FamilyParams resolved = DefaultParams(family);
  const auto& ranges = Ranges(family);
  for (const auto& [key, value] : params) {
    const auto it = ranges.find(key);
    if (it == ranges.end()) {
      throw Error(ErrorCode::kParamOutOfRange,
                  "unknown parameter '" + key + "' for family " +
                      std::string(FamilyName(family)));
    }
    resolved[key] = value;
  }
  for (const auto& [key, value] : resolved) {
    const ParamRange& r = ranges.at(key);
    const bool integral_ok = !r.integral || value == std::round(value);
    if (!(value >= r.lo && value <= r.hi) || !integral_ok) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%s=%g outside [%g, %g]%s", key.c_str(),
                    value, r.lo, r.hi, r.integral ? " (integer)" : "");
      throw Error(ErrorCode::kParamOutOfRange, buf);
    }
  }
  if (family == Family::kKnapsack &&
      resolved["capacity_ratio_min"] > resolved["capacity_ratio_max"]) {
    throw Error(ErrorCode::kParamOutOfRange,
                "capacity_ratio_min > capacity_ratio_max");
  }
  return resolved;
}

std::uint64_t DeriveThetaSeed(std::uint64_t master_seed, Split split,
                              int index) {
  const std::uint64_t stream = static_cast<std::uint64_t>(split) << 40;
  return Mix64(Mix64(master_seed) + stream + static_cast<std::uint64_t>(index));
}

MilpInstance GenerateInstance(Family family, const FamilyParams& resolved,
                              std::uint64_t theta_seed, std::string id) {
  Sampler rng(theta_seed);
  MilpInstance instance;
  switch (family) {
    case Family::kKnapsack: instance = GenerateKnapsack(resolved, rng); break;
    case Family::kSetCover: instance = GenerateSetCover(resolved, rng); break;
    case Family::kCflpSmall: instance = GenerateCflp(resolved, rng); break;
  }
  instance.id = std::move(id);
  instance.theta_seed = theta_seed;
  return instance;
}

InstanceSet GenerateFamily(Family family, const FamilyParams& params,
                           std::uint64_t master_seed, int count, Split split) {
  if (count < 1) {
    throw Error(ErrorCode::kInvalidArgument, "count must be >= 1");
  }
  InstanceSet set;
  set.split = split;
  set.family = family;
  set.params = ResolveParams(family, params);
  set.master_seed = master_seed;
  set.instances.reserve(count);
  for (int i = 0; i < count; ++i) {
    char id[96];
    std::snprintf(id, sizeof(id), "%s-%s-%05d",
                  std::string(FamilyName(family)).c_str(),
                  std::string(SplitName(split)).c_str(), i);
    set.instances.push_back(GenerateInstance(
        family, set.params, DeriveThetaSeed(master_seed, split, i), id));
  }
  return set;
}

MilpInstance MakeKnapsack(std::string id, std::span<const double> values,
                          const std::vector<std::vector<double>>& weights,
                          std::span<const double> capacities) {
  if (weights.size() != capacities.size()) {
    throw Error(ErrorCode::kInvalidInstance, "one capacity per weight row");
  }
  Builder b;
  b.instance.family = Family::kKnapsack;
  for (double v : values) b.AddVar(-v, 0.0, 1.0, true);
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k].size() != values.size()) {
      throw Error(ErrorCode::kInvalidInstance, "weight row length");
    }
    std::vector<std::pair<int, double>> terms;
    for (std::size_t i = 0; i < values.size(); ++i) {
      terms.emplace_back(static_cast<int>(i), weights[k][i]);
    }
    b.AddRow(terms, Sense::kLe, capacities[k]);
  }
  b.instance.id = std::move(id);
  return b.Finish();
}

BruteForceResult BruteForceSolve(const MilpInstance& instance) {
  ValidateInstance(instance);
  std::vector<int> ints;
  for (int j = 0; j < instance.num_vars; ++j) {
    if (instance.is_integer[j]) ints.push_back(j);
  }
  if (static_cast<int>(ints.size()) > kBruteForceMaxIntegers) {
    throw Error(ErrorCode::kTooLarge,
                std::to_string(ints.size()) + " integer variables");
  }
  std::vector<double> lo(ints.size());
  std::vector<double> hi(ints.size());
  double combos = 1.0;
  for (std::size_t k = 0; k < ints.size(); ++k) {
    lo[k] = std::ceil(instance.var_lower[ints[k]]);
    hi[k] = std::floor(instance.var_upper[ints[k]]);
    if (!std::isfinite(lo[k]) || !std::isfinite(hi[k])) {
      throw Error(ErrorCode::kTooLarge, "unbounded integer domain");
    }
    if (hi[k] < lo[k]) throw Error(ErrorCode::kInfeasible, instance.id);
    combos *= hi[k] - lo[k] + 1.0;
  }
  if (combos > static_cast<double>(1 << kBruteForceMaxIntegers)) {
    throw Error(ErrorCode::kTooLarge, "integer domain product too large");
  }

  const bool mixed = instance.HasContinuousVars();
  std::vector<double> x(instance.num_vars, 0.0);
  for (int j = 0; j < instance.num_vars; ++j) {
    if (!instance.is_integer[j]) x[j] = instance.var_lower[j];
  }
  for (std::size_t k = 0; k < ints.size(); ++k) x[ints[k]] = lo[k];

  BruteForceResult best;
  bool found = false;
  while (true) {
    if (mixed) {
      const LpResult lp = SolveWithIntegersFixed(instance, x);
      if (lp.status == LpStatus::kUnbounded) {
        throw Error(ErrorCode::kInvalidInstance, "unbounded continuous part");
      }
      if (lp.status == LpStatus::kOptimal &&
          (!found || lp.objective < best.z_star)) {
        best.z_star = lp.objective;
        best.x_star = lp.x;
        found = true;
      }
    } else if (IsFeasible(instance, x, 1e-9)) {
      const double obj = EvaluateObjective(instance, x);
      if (!found || obj < best.z_star) {
        best.z_star = obj;
        best.x_star = x;
        found = true;
      }
    }
    // Mixed-radix increment over the integer coordinates.
    std::size_t k = 0;
    for (; k < ints.size(); ++k) {
      if (x[ints[k]] < hi[k]) {
        x[ints[k]] += 1.0;
        break;
      }
      x[ints[k]] = lo[k];
    }
    if (k == ints.size()) break;
  }
  if (!found) throw Error(ErrorCode::kInfeasible, instance.id);
  return best;
}

}  // namespace cpstop
