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

#include "cpstop/bnb.h"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <utility>

#include "cpstop/error.h"

namespace cpstop {
namespace {

// LP objectives are shaded down by this relative margin before they are used
// as node bounds, so float error never lifts a bound above z*.
constexpr double kBoundMargin = 1e-9;
// A node is pruned when its bound is within this relative distance of U.
constexpr double kPruneTol = 1e-7;

double SafeBound(double lp_objective) {
  return lp_objective - kBoundMargin * (1.0 + std::abs(lp_objective));
}

bool Prunable(double bound, double upper) {
  return std::isfinite(upper) &&
         bound >= upper - kPruneTol * (1.0 + std::abs(upper));
}

struct Node {
  std::vector<double> lower;
  std::vector<double> upper;
  double bound = -kInf;
  int depth = 0;
  std::int64_t id = 0;
};

struct BestBoundOrder {
  bool operator()(const Node& a, const Node& b) const {
    // priority_queue keeps the "largest" on top; invert for min-bound first,
    // deeper nodes first on ties, then creation order.
    if (a.bound != b.bound) return a.bound > b.bound;
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.id > b.id;
  }
};

class OpenNodes {
 public:
  explicit OpenNodes(NodeSelection selection) : selection_(selection) {}

  bool empty() const { return bounds_.empty(); }

  void Push(Node node) {
    bounds_.insert(node.bound);
    if (selection_ == NodeSelection::kBestBound) {
      heap_.push(std::move(node));
    } else {
      stack_.push_back(std::move(node));
    }
  }

  Node Pop() {
    Node node;
    if (selection_ == NodeSelection::kBestBound) {
      node = heap_.top();
      heap_.pop();
    } else {
      node = std::move(stack_.back());
      stack_.pop_back();
    }
    bounds_.erase(bounds_.find(node.bound));
    return node;
  }

  // Smallest bound among nodes that are not yet prunable against `upper`.
  double MinLiveBound(double upper) const {
    if (bounds_.empty()) return kInf;
    const double smallest = *bounds_.begin();
    return Prunable(smallest, upper) ? kInf : smallest;
  }

 private:
  NodeSelection selection_;
  std::priority_queue<Node, std::vector<Node>, BestBoundOrder> heap_;
  std::vector<Node> stack_;
  std::multiset<double> bounds_;
};

double RowViolation(Sense sense, double activity, double rhs) {
  const double tol = 1e-9 * (1.0 + std::abs(rhs));
  double v = 0.0;
  switch (sense) {
    case Sense::kLe: v = activity - rhs; break;
    case Sense::kGe: v = rhs - activity; break;
    case Sense::kEq: v = std::abs(activity - rhs); break;
  }
  return v > tol ? v : 0.0;
}

class Search {
 public:
  Search(const MilpInstance& instance, const BnbConfig& config,
         const TickCallback& on_tick)
      : instance_(instance),
        config_(config),
        on_tick_(on_tick),
        open_(config.node_selection) {
    for (int i = 0; i < instance.num_cons; ++i) {
      bool pure = true;
      const auto row = instance.Row(i);
      for (int j = 0; j < instance.num_vars; ++j) {
        if (row[j] != 0.0 && !instance.is_integer[j]) pure = false;
      }
      if (pure) pure_integer_rows_.push_back(i);
    }
    mixed_ = instance.HasContinuousVars();
  }

  SolveResult Run() {
    trace_.instance_id = instance_.id;
    Node root;
    root.lower = instance_.var_lower;
    root.upper = instance_.var_upper;
    root.id = next_id_++;
    open_.Push(std::move(root));

    bool finished = false;
    while (!finished) {
      std::optional<Node> node;
      while (!open_.empty()) {
        Node candidate = open_.Pop();
        if (Prunable(candidate.bound, upper_)) continue;
        node = std::move(candidate);
        break;
      }
      if (!node) break;

      if (!Process(*node)) {
        trace_.status = SolveStatus::kUnbounded;
        return Finish();
      }
      finished = EmitSample();
    }
    if (!finished) {
      // Tree exhausted without meeting the gap test: only possible when no
      // incumbent exists.
      trace_.status = std::isfinite(upper_) ? SolveStatus::kOptimalWithinEps
                                            : SolveStatus::kInfeasible;
    }
    return Finish();
  }

 private:
  // Returns false when the relaxation is unbounded.
  bool Process(Node& node) {
    ++nodes_;
    pending_incumbent_.reset();
    const LpResult lp =
        SolveLpRelaxation(instance_, node.lower, node.upper, lp_options_);
    switch (lp.status) {
      case LpStatus::kInfeasible: return true;
      case LpStatus::kUnbounded: return false;
      case LpStatus::kPivotLimit: {
        ++trace_.lp_failures;
        // No usable bound: keep the inherited one and split the first free
        // integer domain in half.
        for (int j = 0; j < instance_.num_vars; ++j) {
          if (instance_.is_integer[j] && node.lower[j] < node.upper[j]) {
            const double mid = std::floor((node.lower[j] + node.upper[j]) / 2);
            Branch(node, j, mid, node.bound);
            break;
          }
        }
        return true;
      }
      case LpStatus::kOptimal: break;
    }

    const double bound = std::max(node.bound, SafeBound(lp.objective));
    if (Prunable(bound, upper_)) return true;

    const int branch_var = MostFractional(lp.x);
    if (branch_var < 0) {
      TryIncumbent(lp.x);
      return true;
    }
    if (config_.rounding_heuristic_enabled) RoundingHeuristic(node, lp.x);
    if (Prunable(bound, upper_)) return true;
    Branch(node, branch_var, std::floor(lp.x[branch_var]), bound);
    return true;
  }

  void Branch(const Node& node, int var, double split, double bound) {
    Node down;
    down.lower = node.lower;
    down.upper = node.upper;
    down.upper[var] = split;
    down.bound = bound;
    down.depth = node.depth + 1;
    down.id = next_id_++;
    Node up;
    up.lower = node.lower;
    up.upper = node.upper;
    up.lower[var] = split + 1.0;
    up.bound = bound;
    up.depth = node.depth + 1;
    up.id = next_id_++;
    // Depth-first pops the up branch first.
    open_.Push(std::move(down));
    open_.Push(std::move(up));
  }

  int MostFractional(const std::vector<double>& x) const {
    int best = -1;
    double best_score = config_.integrality_tol;
    for (int j = 0; j < instance_.num_vars; ++j) {
      if (!instance_.is_integer[j]) continue;
      const double frac = x[j] - std::floor(x[j]);
      const double score = std::min(frac, 1.0 - frac);
      if (score > best_score) {
        best_score = score;
        best = j;
      }
    }
    return best;
  }

  // Integer coordinates are rounded; continuous ones are re-optimized with
  // the integers pinned so that scores agree bit-for-bit with the oracle.
  void TryIncumbent(std::vector<double> x) {
    for (int j = 0; j < instance_.num_vars; ++j) {
      if (instance_.is_integer[j]) x[j] = std::round(x[j]);
    }
    double objective = 0.0;
    if (mixed_) {
      const LpResult polished =
          SolveWithIntegersFixed(instance_, x, lp_options_);
      if (polished.status != LpStatus::kOptimal) return;
      x = polished.x;
      objective = polished.objective;
    } else {
      if (!IsFeasible(instance_, x, 1e-9)) return;
      objective = EvaluateObjective(instance_, x);
    }
    if (objective < upper_) {
      upper_ = objective;
      best_solution_ = x;
      pending_incumbent_ = static_cast<int>(trace_.incumbents.size());
      trace_.incumbents.push_back({tick_, objective, std::move(x)});
    }
  }

  // Round to nearest, repair integer-only rows greedily, then (pure-integer
  // instances only) apply improving single-variable moves while feasible.
  void RoundingHeuristic(const Node& node, const std::vector<double>& lp_x) {
    std::vector<double> x = lp_x;
    for (int j = 0; j < instance_.num_vars; ++j) {
      if (instance_.is_integer[j]) {
        x[j] = std::clamp(std::round(x[j]), node.lower[j], node.upper[j]);
      }
    }
    std::vector<double> activity(instance_.num_cons, 0.0);
    for (int i : pure_integer_rows_) {
      const auto row = instance_.Row(i);
      for (int j = 0; j < instance_.num_vars; ++j) activity[i] += row[j] * x[j];
    }
    auto violation_delta = [&](int j, double delta) {
      double change = 0.0;
      for (int i : pure_integer_rows_) {
        const double a = instance_.Row(i)[j];
        if (a == 0.0) continue;
        const Sense s = instance_.con_sense[i];
        const double b = instance_.con_rhs[i];
        change += RowViolation(s, activity[i] + a * delta, b) -
                  RowViolation(s, activity[i], b);
      }
      return change;
    };
    auto apply = [&](int j, double delta) {
      x[j] += delta;
      for (int i : pure_integer_rows_) activity[i] += instance_.Row(i)[j] * delta;
    };
    auto total_violation = [&] {
      double v = 0.0;
      for (int i : pure_integer_rows_) {
        v += RowViolation(instance_.con_sense[i], activity[i],
                          instance_.con_rhs[i]);
      }
      return v;
    };

    for (int iter = 0; iter < 4 * instance_.num_vars && total_violation() > 0;
         ++iter) {
      int best_j = -1;
      double best_delta = 0.0;
      double best_change = 0.0;
      double best_cost = kInf;
      for (int j = 0; j < instance_.num_vars; ++j) {
        if (!instance_.is_integer[j]) continue;
        for (double delta : {-1.0, 1.0}) {
          if (x[j] + delta < node.lower[j] || x[j] + delta > node.upper[j]) {
            continue;
          }
          const double change = violation_delta(j, delta);
          const double cost = instance_.objective[j] * delta;
          if (change < best_change - 1e-12 ||
              (change < 0 && change <= best_change + 1e-12 &&
               cost < best_cost)) {
            best_j = j;
            best_delta = delta;
            best_change = change;
            best_cost = cost;
          }
        }
      }
      if (best_j < 0) return;
      apply(best_j, best_delta);
    }
    if (total_violation() > 0) return;

    if (!mixed_) {
      for (int iter = 0; iter < 4 * instance_.num_vars; ++iter) {
        int best_j = -1;
        double best_delta = 0.0;
        double best_cost = 0.0;
        for (int j = 0; j < instance_.num_vars; ++j) {
          if (!instance_.is_integer[j]) continue;
          for (double delta : {-1.0, 1.0}) {
            const double cost = instance_.objective[j] * delta;
            if (cost >= best_cost) continue;
            if (x[j] + delta < node.lower[j] || x[j] + delta > node.upper[j]) {
              continue;
            }
            if (violation_delta(j, delta) > 0) continue;
            best_j = j;
            best_delta = delta;
            best_cost = cost;
          }
        }
        if (best_j < 0) break;
        apply(best_j, best_delta);
      }
    }
    TryIncumbent(std::move(x));
  }

  // Records the post-node sample. Returns true when the search must stop.
  bool EmitSample() {
    const double live = open_.MinLiveBound(upper_);
    double lower = std::min(upper_, live);
    lower_ = std::min(std::max(lower_, lower), upper_);

    TraceSample sample;
    sample.tick = tick_;
    sample.upper = upper_;
    sample.lower = lower_;
    sample.nodes_explored = nodes_;
    sample.incumbent_id = pending_incumbent_;
    trace_.samples.push_back(sample);
    ++tick_;

    if (on_tick_ && on_tick_(sample) == CallbackAction::kStop) {
      trace_.status = SolveStatus::kStoppedByCallback;
      return true;
    }
    if (AlgorithmicGap(upper_, lower_) <= config_.epsilon) {
      trace_.status = SolveStatus::kOptimalWithinEps;
      return true;
    }
    if (tick_ >= config_.tick_limit) {
      trace_.status = SolveStatus::kTickLimit;
      return true;
    }
    return false;
  }

  SolveResult Finish() {
    if (trace_.status == SolveStatus::kInfeasible && !trace_.samples.empty()) {
      trace_.samples.back().lower = kInf;
    }
    if (trace_.status == SolveStatus::kOptimalWithinEps &&
        !trace_.samples.empty() &&
        trace_.samples.back().upper == trace_.samples.back().lower) {
      trace_.z_star = upper_;
    }
    SolveResult result;
    if (best_solution_) {
      result.best_solution = best_solution_;
      result.best_objective = upper_;
    }
    result.trace = std::move(trace_);
    return result;
  }

  const MilpInstance& instance_;
  const BnbConfig& config_;
  const TickCallback& on_tick_;
  LpOptions lp_options_;
  OpenNodes open_;
  std::vector<int> pure_integer_rows_;
  bool mixed_ = false;

  BoundTrace trace_;
  double upper_ = kInf;
  double lower_ = -kInf;
  std::int64_t tick_ = 0;
  std::int64_t nodes_ = 0;
  std::int64_t next_id_ = 0;
  std::optional<int> pending_incumbent_;
  std::optional<std::vector<double>> best_solution_;
};

}  // namespace

void BnbConfig::Validate() const {
  if (!(epsilon >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be >= 0");
  }
  if (tick_limit < 1) {
    throw Error(ErrorCode::kInvalidArgument, "tick_limit must be >= 1");
  }
  if (!(integrality_tol > 0.0 && integrality_tol < 0.5)) {
    throw Error(ErrorCode::kInvalidArgument,
                "integrality_tol must lie in (0, 0.5)");
  }
}

const char* SolveStatusName(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimalWithinEps: return "OptimalWithinEps";
    case SolveStatus::kTickLimit: return "TickLimit";
    case SolveStatus::kInfeasible: return "Infeasible";
    case SolveStatus::kUnbounded: return "Unbounded";
    case SolveStatus::kStoppedByCallback: return "StoppedByCallback";
  }
  return "Unknown";
}

SolveStatus ParseSolveStatus(const std::string& name) {
  for (SolveStatus s :
       {SolveStatus::kOptimalWithinEps, SolveStatus::kTickLimit,
        SolveStatus::kInfeasible, SolveStatus::kUnbounded,
        SolveStatus::kStoppedByCallback}) {
    if (name == SolveStatusName(s)) return s;
  }
  throw Error(ErrorCode::kParseError, "unknown solve status '" + name + "'");
}

std::ptrdiff_t BoundTrace::IndexAt(std::int64_t tick) const {
  const auto it = std::upper_bound(
      samples.begin(), samples.end(), tick,
      [](std::int64_t t, const TraceSample& s) { return t < s.tick; });
  return (it - samples.begin()) - 1;
}

double AlgorithmicGap(double upper, double lower) {
  if (!std::isfinite(upper) || !std::isfinite(lower)) return kInf;
  if (upper == lower) return 0.0;
  if (lower == 0.0) return kInf;
  return (upper - lower) / std::abs(lower);
}

SolveResult Solve(const MilpInstance& instance, const BnbConfig& config,
                  const TickCallback& on_tick) {
  ValidateInstance(instance);
  config.Validate();
  Search search(instance, config, on_tick);
  return search.Run();
}

}  // namespace cpstop
