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

// Gap predictor: covariates from solver traces, a squashed MLP whose output is
// confined to [0, U - L], the inverse-gap weighted training loss, Adam, and a
// finite-difference gradient check.

#ifndef CPSTOP_GAP_PREDICTOR_H_
#define CPSTOP_GAP_PREDICTOR_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cpstop/bnb.h"
#include "cpstop/instances.h"
#include "cpstop/mlp.h"
#include "cpstop/trace_math.h"

namespace cpstop {

struct FeatureConfig {
  // Rolling-average windows, in ticks.
  std::vector<int> windows{5, 25, 100};
  // Before the first incumbent U is replaced by
  // root_bound + upper_cap_span * max(1, |root_bound|).
  double upper_cap_span = 1.0;
  // theta_params entries exposed to the network, in this order. Missing keys
  // read as 0.
  std::vector<std::string> theta_keys;
};

// upper, lower, (upper_avg_w, lower_avg_w) per window, tick, nodes_explored,
// no_incumbent, theta...
std::vector<std::string> FeatureNames(const FeatureConfig& config);
int FeatureDimension(const FeatureConfig& config);

struct FeatureNorm {
  std::vector<double> mean;
  std::vector<double> stddev;

  void Apply(std::span<double> features) const;
};

struct SubstitutedBounds {
  double upper = 0.0;
  double lower = 0.0;
  bool no_incumbent = false;
};

// Featurizes every sample of one trace in O(samples * windows).
class TraceFeatures {
 public:
  TraceFeatures(const BoundTrace& trace, const ThetaParams& theta,
                const FeatureConfig& config);

  std::size_t size() const { return bounds_.size(); }
  const SubstitutedBounds& Bounds(std::size_t index) const {
    return bounds_[index];
  }
  std::vector<double> Raw(std::size_t index) const;

 private:
  const BoundTrace& trace_;
  const FeatureConfig& config_;
  std::vector<double> theta_;
  std::vector<SubstitutedBounds> bounds_;
  std::vector<double> upper_prefix_;
  std::vector<double> lower_prefix_;
};

// Feature vector at an exact sample tick; throws kTickNotInTrace otherwise.
// Normalized when `norm` is given.
std::vector<double> Featurize(const BoundTrace& trace, std::int64_t tick,
                              const ThetaParams& theta,
                              const FeatureConfig& config,
                              const FeatureNorm* norm = nullptr);

// (u - l) * e^x / (1 + e^x), evaluated without overflow. Throws
// kInvalidInterval when l > u or either end is not finite.
double Squash(double x, double lower, double upper);

struct GapPredictorModel {
  Mlp net;
  FeatureConfig features;
  FeatureNorm norm;
  std::uint64_t rng_seed = 0;
  std::string config_hash;
  std::vector<double> train_loss;
  std::vector<double> validation_loss;
};

// Hidden sizes exclude the input and the scalar output.
GapPredictorModel InitModel(const FeatureConfig& features,
                            const FeatureNorm& norm,
                            const std::vector<int>& hidden,
                            std::uint64_t seed);

double PredictGap(const GapPredictorModel& model, const BoundTrace& trace,
                  const ThetaParams& theta, std::int64_t tick);

// Predictions at every sample of the trace.
GapSeries PredictSeries(const GapPredictorModel& model, const BoundTrace& trace,
                        const ThetaParams& theta);

struct TrainingConfig {
  double step_size = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size = 256;
  int epochs = 30;
  // y_min in 1 / max(y, y_min).
  double weight_floor = 1e-4;
  // Discretization stride in ticks.
  int stride = 1;
  // When > 0, a trace longer than this many samples is read at the coarser
  // stride ceil((T + 1) / max_samples_per_trace) instead.
  int max_samples_per_trace = 0;
  std::uint64_t seed = 0;
  std::vector<int> hidden{64, 64};
  // Trailing fraction of the traces held out for the validation curve.
  double validation_fraction = 0.1;

  void Validate() const;
};

double SampleWeight(double y, double y_min);

// 1 / max(y, y_min), scaled to sum to one.
std::vector<double> NormalizedWeights(std::span<const double> y, double y_min);

struct TrainingTrace {
  BoundTrace trace;  // Must carry z_star.
  ThetaParams theta;
};

struct LossSample {
  std::vector<double> features;  // Normalized.
  double lower = 0.0;
  double upper = 0.0;
  double target = 0.0;  // U - z*.
  double weight = 0.0;  // Normalized within its trace.
};

struct LossBatch {
  std::vector<LossSample> samples;
  // d in the 1/d prefactor.
  int trace_count = 0;
};

// Samples every `stride` ticks; ticks without an incumbent are dropped.
// Throws kMissingOptimum if a trace has no z_star.
LossBatch BuildLossBatch(std::span<const TrainingTrace> traces,
                         const FeatureConfig& features, const FeatureNorm& norm,
                         const TrainingConfig& config);

FeatureNorm FitFeatureNorm(std::span<const TrainingTrace> traces,
                           const FeatureConfig& features,
                           const TrainingConfig& config);

// (1/d) sum w (phi(h(x) | L, U) - y)^2. Fills grad (resized to the parameter
// count) when given.
double BatchLoss(const Mlp& net, const LossBatch& batch,
                 std::vector<double>* grad = nullptr);

double EmpiricalLoss(const GapPredictorModel& model,
                     std::span<const TrainingTrace> traces,
                     const TrainingConfig& config);

// Adam on minibatches of samples. Returns the parameters with the lowest
// full training loss seen, so the final loss never exceeds the initial one.
// Throws kEmptyDataset and kNonFiniteLoss.
GapPredictorModel Train(std::span<const TrainingTrace> traces,
                        const TrainingConfig& config,
                        const FeatureConfig& features);

struct GradientCheckResult {
  double max_relative_error = 0.0;
  int checked = 0;
  // Parameters redrawn because a ReLU changed sign inside the +-h stencil.
  int skipped_at_kink = 0;
};

// Central differences with step 1e-5 * max(1, |p|) on a random subset of
// `subset_size` parameters (all of them if the network is smaller).
GradientCheckResult GradientCheck(const GapPredictorModel& model,
                                  const LossBatch& batch, int subset_size = 64,
                                  std::uint64_t seed = 0);

}  // namespace cpstop

#endif  // CPSTOP_GAP_PREDICTOR_H_
