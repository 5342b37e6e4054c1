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

#include "cpstop/lp.h"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace cpstop {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarState { kBasic, kAtLower, kAtUpper, kFreeZero };

// Full tableau B^-1 [A | I | diag(sign)] over structural, slack and
// artificial columns, with the basic values kept alongside.
class BoundedSimplex {
 public:
  BoundedSimplex(const MilpInstance& instance, std::span<const double> lower,
                 std::span<const double> upper, const LpOptions& options)
      : instance_(instance),
        options_(options),
        m_(instance.num_cons),
        n_(instance.num_vars),
        cols_(n_ + 2 * m_),
        tableau_(static_cast<std::size_t>(m_) * cols_, 0.0),
        rhs_(m_, 0.0),
        beta_(m_, 0.0),
        lo_(cols_),
        hi_(cols_),
        cost_(cols_, 0.0),
        state_(cols_),
        basis_(m_) {
    for (int j = 0; j < n_; ++j) {
      lo_[j] = lower[j];
      hi_[j] = upper[j];
    }
    for (int i = 0; i < m_; ++i) {
      switch (instance.con_sense[i]) {
        case Sense::kLe: lo_[n_ + i] = 0.0; hi_[n_ + i] = kInf; break;
        case Sense::kGe: lo_[n_ + i] = -kInf; hi_[n_ + i] = 0.0; break;
        case Sense::kEq: lo_[n_ + i] = 0.0; hi_[n_ + i] = 0.0; break;
      }
      lo_[n_ + m_ + i] = 0.0;
      hi_[n_ + m_ + i] = kInf;
    }
    for (int k = 0; k < n_ + m_; ++k) {
      if (std::isfinite(lo_[k])) {
        state_[k] = VarState::kAtLower;
      } else if (std::isfinite(hi_[k])) {
        state_[k] = VarState::kAtUpper;
      } else {
        state_[k] = VarState::kFreeZero;
      }
    }
    for (int i = 0; i < m_; ++i) {
      // residual = b_i - a_i x_N - s_i with every slack starting at 0.
      double residual = instance.con_rhs[i];
      const auto row = instance.Row(i);
      for (int j = 0; j < n_; ++j) residual -= row[j] * Value(j);
      const double sign = residual >= 0.0 ? 1.0 : -1.0;
      double* t = Tab(i);
      for (int j = 0; j < n_; ++j) t[j] = sign * row[j];
      t[n_ + i] = sign;
      t[n_ + m_ + i] = 1.0;
      rhs_[i] = sign * instance.con_rhs[i];
      basis_[i] = n_ + m_ + i;
      state_[n_ + m_ + i] = VarState::kBasic;
    }
    RecomputeBasicValues();
    max_pivots_ = options.max_pivots > 0 ? options.max_pivots
                                         : 50 * (m_ + cols_) + 1000;
  }

  LpResult Run() {
    LpResult result;
    for (int j = 0; j < n_; ++j) {
      if (lo_[j] > hi_[j]) {
        result.status = LpStatus::kInfeasible;
        return result;
      }
    }

    // Phase 1: minimize the sum of artificials.
    for (int i = 0; i < m_; ++i) cost_[n_ + m_ + i] = 1.0;
    LpStatus status = Iterate();
    result.pivots = pivots_;
    if (status == LpStatus::kPivotLimit) {
      result.status = status;
      return result;
    }
    RecomputeBasicValues();
    double infeasibility = 0.0;
    double rhs_scale = 1.0;
    for (int i = 0; i < m_; ++i) {
      rhs_scale = std::max(rhs_scale, std::abs(instance_.con_rhs[i]));
      if (basis_[i] >= n_ + m_) infeasibility += beta_[i];
    }
    if (infeasibility > 1e-7 * rhs_scale) {
      result.status = LpStatus::kInfeasible;
      return result;
    }

    // Phase 2: artificials are pinned at zero.
    for (int i = 0; i < m_; ++i) {
      cost_[n_ + m_ + i] = 0.0;
      hi_[n_ + m_ + i] = 0.0;
    }
    for (int j = 0; j < n_; ++j) cost_[j] = instance_.objective[j];
    status = Iterate();
    result.pivots = pivots_;
    if (status != LpStatus::kOptimal) {
      result.status = status;
      return result;
    }
    RecomputeBasicValues();

    result.status = LpStatus::kOptimal;
    result.x.assign(n_, 0.0);
    for (int j = 0; j < n_; ++j) {
      if (state_[j] != VarState::kBasic) result.x[j] = Value(j);
    }
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] < n_) {
        // Clip drift back into the box.
        result.x[basis_[i]] =
            std::clamp(beta_[i], lo_[basis_[i]], hi_[basis_[i]]);
      }
    }
    result.objective = EvaluateObjective(instance_, result.x);
    return result;
  }

 private:
  double* Tab(int row) {
    return tableau_.data() + static_cast<std::size_t>(row) * cols_;
  }
  const double* Tab(int row) const {
    return tableau_.data() + static_cast<std::size_t>(row) * cols_;
  }

  double Value(int k) const {
    switch (state_[k]) {
      case VarState::kAtLower: return lo_[k];
      case VarState::kAtUpper: return hi_[k];
      case VarState::kFreeZero: return 0.0;
      case VarState::kBasic: break;
    }
    return 0.0;
  }

  void RecomputeBasicValues() {
    for (int i = 0; i < m_; ++i) {
      const double* t = Tab(i);
      double v = rhs_[i];
      for (int k = 0; k < cols_; ++k) {
        if (state_[k] == VarState::kBasic) continue;
        const double value = Value(k);
        if (value != 0.0) v -= t[k] * value;
      }
      beta_[i] = v;
    }
  }

  LpStatus Iterate() {
    std::vector<double> reduced(cols_);
    while (true) {
      if (pivots_ >= max_pivots_) return LpStatus::kPivotLimit;

      // Reduced costs d_k = c_k - c_B^T T_k.
      for (int k = 0; k < cols_; ++k) reduced[k] = cost_[k];
      for (int i = 0; i < m_; ++i) {
        const double cb = cost_[basis_[i]];
        if (cb == 0.0) continue;
        const double* t = Tab(i);
        for (int k = 0; k < cols_; ++k) reduced[k] -= cb * t[k];
      }

      // Bland: lowest-index improving column.
      int entering = -1;
      double direction = 0.0;
      for (int k = 0; k < cols_; ++k) {
        if (state_[k] == VarState::kBasic || lo_[k] == hi_[k]) continue;
        const bool can_increase =
            state_[k] == VarState::kAtLower || state_[k] == VarState::kFreeZero;
        const bool can_decrease =
            state_[k] == VarState::kAtUpper || state_[k] == VarState::kFreeZero;
        if (can_increase && reduced[k] < -options_.optimality_tol) {
          entering = k;
          direction = 1.0;
          break;
        }
        if (can_decrease && reduced[k] > options_.optimality_tol) {
          entering = k;
          direction = -1.0;
          break;
        }
      }
      if (entering < 0) return LpStatus::kOptimal;

      // Ratio test; the entering column's own bound flip competes with the
      // rows, ties go to the lowest variable index.
      double step = hi_[entering] - lo_[entering];
      int leave_row = -1;
      int leave_index = entering;
      for (int i = 0; i < m_; ++i) {
        const double a = Tab(i)[entering] * direction;
        const int b = basis_[i];
        double ratio = kInf;
        if (a > options_.pivot_tol && std::isfinite(lo_[b])) {
          ratio = (beta_[i] - lo_[b]) / a;
        } else if (a < -options_.pivot_tol && std::isfinite(hi_[b])) {
          ratio = (hi_[b] - beta_[i]) / -a;
        } else {
          continue;
        }
        ratio = std::max(ratio, 0.0);
        if (ratio < step - 1e-12 ||
            (ratio <= step + 1e-12 && b < leave_index)) {
          step = ratio;
          leave_row = i;
          leave_index = b;
        }
      }
      if (!std::isfinite(step)) return LpStatus::kUnbounded;

      ++pivots_;
      const double entering_value = Value(entering) + direction * step;
      for (int i = 0; i < m_; ++i) {
        beta_[i] -= Tab(i)[entering] * direction * step;
      }
      if (leave_row < 0) {
        state_[entering] = direction > 0 ? VarState::kAtUpper
                                         : VarState::kAtLower;
        continue;
      }

      const int leaving = basis_[leave_row];
      const double a = Tab(leave_row)[entering] * direction;
      state_[leaving] = a > 0 ? VarState::kAtLower : VarState::kAtUpper;
      Pivot(leave_row, entering);
      basis_[leave_row] = entering;
      state_[entering] = VarState::kBasic;
      beta_[leave_row] = entering_value;
    }
  }

  void Pivot(int row, int col) {
    double* pr = Tab(row);
    const double inv = 1.0 / pr[col];
    for (int k = 0; k < cols_; ++k) pr[k] *= inv;
    pr[col] = 1.0;
    rhs_[row] *= inv;
    for (int i = 0; i < m_; ++i) {
      if (i == row) continue;
      double* t = Tab(i);
      const double factor = t[col];
      if (factor == 0.0) continue;
      for (int k = 0; k < cols_; ++k) t[k] -= factor * pr[k];
      t[col] = 0.0;
      rhs_[i] -= factor * rhs_[row];
    }
  }

  const MilpInstance& instance_;
  LpOptions options_;
  int m_;
  int n_;
  int cols_;
  std::vector<double> tableau_;
  std::vector<double> rhs_;
  std::vector<double> beta_;
  std::vector<double> lo_;
  std::vector<double> hi_;
  std::vector<double> cost_;
  std::vector<VarState> state_;
  std::vector<int> basis_;
  int pivots_ = 0;
  int max_pivots_ = 0;
};

}  // namespace

const char* LpStatusName(LpStatus status) {
  switch (status) {
    case LpStatus::kOptimal: return "Optimal";
    case LpStatus::kInfeasible: return "LpInfeasible";
    case LpStatus::kUnbounded: return "LpUnbounded";
    case LpStatus::kPivotLimit: return "PivotLimitExceeded";
  }
  return "Unknown";
}

LpResult SolveLpRelaxation(const MilpInstance& instance,
                           std::span<const double> lower,
                           std::span<const double> upper,
                           const LpOptions& options) {
  BoundedSimplex simplex(instance, lower, upper, options);
  return simplex.Run();
}

double EvaluateObjective(const MilpInstance& instance,
                         std::span<const double> x) {
  double total = 0.0;
  for (int j = 0; j < instance.num_vars; ++j) {
    total += instance.objective[j] * x[j];
  }
  return total;
}

bool IsFeasible(const MilpInstance& instance, std::span<const double> x,
                double tol) {
  for (int j = 0; j < instance.num_vars; ++j) {
    if (x[j] < instance.var_lower[j] - tol ||
        x[j] > instance.var_upper[j] + tol) {
      return false;
    }
  }
  for (int i = 0; i < instance.num_cons; ++i) {
    const auto row = instance.Row(i);
    double activity = 0.0;
    for (int j = 0; j < instance.num_vars; ++j) activity += row[j] * x[j];
    const double scale = tol * (1.0 + std::abs(instance.con_rhs[i]));
    switch (instance.con_sense[i]) {
      case Sense::kLe:
        if (activity > instance.con_rhs[i] + scale) return false;
        break;
      case Sense::kGe:
        if (activity < instance.con_rhs[i] - scale) return false;
        break;
      case Sense::kEq:
        if (std::abs(activity - instance.con_rhs[i]) > scale) return false;
        break;
    }
  }
  return true;
}

LpResult SolveWithIntegersFixed(const MilpInstance& instance,
                                std::span<const double> x,
                                const LpOptions& options) {
  std::vector<double> lower = instance.var_lower;
  std::vector<double> upper = instance.var_upper;
  for (int j = 0; j < instance.num_vars; ++j) {
    if (instance.is_integer[j]) {
      lower[j] = upper[j] = std::round(x[j]);
    }
  }
  return SolveLpRelaxation(instance, lower, upper, options);
}

}  // namespace cpstop
