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

#include "cpstop/gap_predictor.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cpstop/error.h"

namespace cpstop {
namespace {

constexpr int kFixedFeatures = 5;  // upper, lower, tick, nodes, no_incumbent.

double Logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<std::uint8_t> ReluPattern(const Mlp& net, const LossBatch& batch) {
  std::vector<std::uint8_t> pattern;
  Mlp::Workspace ws;
  for (const LossSample& s : batch.samples) {
    net.Forward(s.features, ws);
    for (int l = 0; l + 1 < net.num_layers(); ++l) {
      for (double z : ws.pre[l]) pattern.push_back(z > 0.0 ? 1 : 0);
    }
  }
  return pattern;
}

}  // namespace

std::vector<std::string> FeatureNames(const FeatureConfig& config) {
  std::vector<std::string> names{"upper", "lower"};
  for (int w : config.windows) {
    names.push_back("upper_avg_" + std::to_string(w));
    names.push_back("lower_avg_" + std::to_string(w));
  }
  names.insert(names.end(), {"tick", "nodes_explored", "no_incumbent"});
  for (const std::string& key : config.theta_keys) {
    names.push_back("theta_" + key);
  }
  return names;
}

int FeatureDimension(const FeatureConfig& config) {
  return kFixedFeatures + 2 * static_cast<int>(config.windows.size()) +
         static_cast<int>(config.theta_keys.size());
}

void FeatureNorm::Apply(std::span<double> features) const {
  for (std::size_t k = 0; k < features.size(); ++k) {
    features[k] = (features[k] - mean[k]) / stddev[k];
  }
}

TraceFeatures::TraceFeatures(const BoundTrace& trace, const ThetaParams& theta,
                             const FeatureConfig& config)
    : trace_(trace), config_(config) {
  for (int w : config.windows) {
    if (w < 1) throw Error(ErrorCode::kInvalidArgument, "window must be >= 1");
  }
  for (const std::string& key : config.theta_keys) {
    const auto it = theta.find(key);
    theta_.push_back(it == theta.end() ? 0.0 : it->second);
  }

  double root_bound = 0.0;
  bool have_root = false;
  for (const TraceSample& s : trace.samples) {
    if (std::isfinite(s.lower)) {
      root_bound = s.lower;
      have_root = true;
      break;
    }
  }
  if (!have_root) {
    for (const TraceSample& s : trace.samples) {
      if (std::isfinite(s.upper)) {
        root_bound = s.upper - config.upper_cap_span *
                                   std::max(1.0, std::abs(s.upper));
        break;
      }
    }
  }
  const double cap =
      root_bound + config.upper_cap_span * std::max(1.0, std::abs(root_bound));

  bounds_.reserve(trace.samples.size());
  upper_prefix_.assign(1, 0.0);
  lower_prefix_.assign(1, 0.0);
  for (const TraceSample& s : trace.samples) {
    SubstitutedBounds b;
    b.lower = std::isfinite(s.lower) ? s.lower : root_bound;
    b.no_incumbent = !std::isfinite(s.upper);
    b.upper = b.no_incumbent ? std::max(cap, b.lower) : s.upper;
    if (b.lower > b.upper) b.lower = b.upper;
    bounds_.push_back(b);
    upper_prefix_.push_back(upper_prefix_.back() + b.upper);
    lower_prefix_.push_back(lower_prefix_.back() + b.lower);
  }
}

std::vector<double> TraceFeatures::Raw(std::size_t index) const {
  const TraceSample& s = trace_.samples[index];
  const SubstitutedBounds& b = bounds_[index];
  std::vector<double> f;
  f.reserve(FeatureDimension(config_));
  f.push_back(b.upper);
  f.push_back(b.lower);
  for (int w : config_.windows) {
    // Samples with tick in (s.tick - w, s.tick].
    const auto first = std::lower_bound(
        trace_.samples.begin(), trace_.samples.begin() + index,
        s.tick - w + 1,
        [](const TraceSample& a, std::int64_t t) { return a.tick < t; });
    const std::size_t j = static_cast<std::size_t>(first - trace_.samples.begin());
    const double count = static_cast<double>(index + 1 - j);
    f.push_back((upper_prefix_[index + 1] - upper_prefix_[j]) / count);
    f.push_back((lower_prefix_[index + 1] - lower_prefix_[j]) / count);
  }
  f.push_back(static_cast<double>(s.tick));
  f.push_back(static_cast<double>(s.nodes_explored));
  f.push_back(b.no_incumbent ? 1.0 : 0.0);
  f.insert(f.end(), theta_.begin(), theta_.end());
  return f;
}

std::vector<double> Featurize(const BoundTrace& trace, std::int64_t tick,
                              const ThetaParams& theta,
                              const FeatureConfig& config,
                              const FeatureNorm* norm) {
  const std::ptrdiff_t index = trace.IndexAt(tick);
  if (index < 0 || trace.samples[index].tick != tick) {
    throw Error(ErrorCode::kTickNotInTrace,
                trace.instance_id + " tick " + std::to_string(tick));
  }
  TraceFeatures features(trace, theta, config);
  std::vector<double> f = features.Raw(static_cast<std::size_t>(index));
  if (norm != nullptr) norm->Apply(f);
  return f;
}

double Squash(double x, double lower, double upper) {
  if (!std::isfinite(lower) || !std::isfinite(upper) || lower > upper) {
    throw Error(ErrorCode::kInvalidInterval,
                "[" + std::to_string(lower) + ", " + std::to_string(upper) + "]");
  }
  return (upper - lower) * Logistic(x);
}

GapPredictorModel InitModel(const FeatureConfig& features,
                            const FeatureNorm& norm,
                            const std::vector<int>& hidden,
                            std::uint64_t seed) {
  const int dim = FeatureDimension(features);
  if (norm.mean.size() != static_cast<std::size_t>(dim) ||
      norm.stddev.size() != static_cast<std::size_t>(dim)) {
    throw Error(ErrorCode::kInvalidArgument, "normalization dimension");
  }
  for (double s : norm.stddev) {
    if (!(s > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "normalization std must be > 0");
    }
  }
  std::vector<int> sizes{dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  GapPredictorModel model;
  model.net = Mlp(sizes);
  model.net.InitGlorot(seed);
  model.features = features;
  model.norm = norm;
  model.rng_seed = seed;
  return model;
}

namespace {

double PredictAt(const GapPredictorModel& model, const TraceFeatures& tf,
                 const BoundTrace& trace, std::size_t index) {
  const SubstitutedBounds& b = tf.Bounds(index);
  const TraceSample& s = trace.samples[index];
  if (b.no_incumbent || !std::isfinite(s.lower)) return b.upper - b.lower;
  if (s.upper == s.lower) return 0.0;
  std::vector<double> f = tf.Raw(index);
  model.norm.Apply(f);
  return Squash(model.net.Forward(f), s.lower, s.upper);
}

}  // namespace

double PredictGap(const GapPredictorModel& model, const BoundTrace& trace,
                  const ThetaParams& theta, std::int64_t tick) {
  const std::ptrdiff_t index = trace.IndexAt(tick);
  if (index < 0) {
    throw Error(ErrorCode::kTickNotInTrace,
                trace.instance_id + " tick " + std::to_string(tick));
  }
  TraceFeatures tf(trace, theta, model.features);
  return PredictAt(model, tf, trace, static_cast<std::size_t>(index));
}

GapSeries PredictSeries(const GapPredictorModel& model, const BoundTrace& trace,
                        const ThetaParams& theta) {
  TraceFeatures tf(trace, theta, model.features);
  GapSeries series;
  series.terminal_tick = trace.TerminalTick();
  series.ticks.reserve(trace.samples.size());
  series.values.reserve(trace.samples.size());
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    series.ticks.push_back(trace.samples[i].tick);
    series.values.push_back(PredictAt(model, tf, trace, i));
  }
  return series;
}

void TrainingConfig::Validate() const {
  auto fail = [](const char* what) {
    throw Error(ErrorCode::kInvalidArgument, what);
  };
  if (!(step_size > 0.0)) fail("step_size must be > 0");
  if (!(weight_floor > 0.0)) fail("weight_floor must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    fail("Adam decay rates must lie in [0, 1)");
  }
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (epochs < 0) fail("epochs must be >= 0");
  if (stride < 1) fail("stride must be >= 1");
  if (max_samples_per_trace < 0) fail("max_samples_per_trace must be >= 0");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    fail("validation_fraction must lie in [0, 1)");
  }
}

double SampleWeight(double y, double y_min) { return 1.0 / std::max(y, y_min); }

std::vector<double> NormalizedWeights(std::span<const double> y, double y_min) {
  std::vector<double> w(y.size());
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    w[i] = SampleWeight(y[i], y_min);
    total += w[i];
  }
  for (double& v : w) v /= total;
  return w;
}

namespace {

struct SampledPoint {
  std::size_t index;
  double target;
};

std::vector<SampledPoint> SamplePoints(const BoundTrace& trace, double z_star,
                                       const TrainingConfig& config) {
  std::vector<SampledPoint> points;
  if (trace.samples.empty()) return points;
  const std::int64_t terminal = trace.TerminalTick();
  std::int64_t stride = config.stride;
  if (config.max_samples_per_trace > 0) {
    const std::int64_t cap = config.max_samples_per_trace;
    stride = std::max(stride, (terminal + cap) / cap);
  }
  const std::int64_t steps = (terminal + stride - 1) / stride;
  for (std::int64_t t = 0; t <= steps; ++t) {
    const std::int64_t tick = std::min<std::int64_t>(t * stride, terminal);
    const std::ptrdiff_t index = trace.IndexAt(tick);
    if (index < 0) continue;
    const TraceSample& s = trace.samples[index];
    if (!std::isfinite(s.upper) || !std::isfinite(s.lower)) continue;
    points.push_back({static_cast<std::size_t>(index),
                      std::max(0.0, s.upper - z_star)});
  }
  return points;
}

const double& RequireOptimum(const TrainingTrace& t) {
  if (!t.trace.z_star) {
    throw Error(ErrorCode::kMissingOptimum, t.trace.instance_id);
  }
  return *t.trace.z_star;
}

}  // namespace

LossBatch BuildLossBatch(std::span<const TrainingTrace> traces,
                         const FeatureConfig& features, const FeatureNorm& norm,
                         const TrainingConfig& config) {
  LossBatch batch;
  batch.trace_count = static_cast<int>(traces.size());
  for (const TrainingTrace& t : traces) {
    const double z_star = RequireOptimum(t);
    const std::vector<SampledPoint> points =
        SamplePoints(t.trace, z_star, config);
    if (points.empty()) continue;
    std::vector<double> targets;
    for (const SampledPoint& p : points) targets.push_back(p.target);
    const std::vector<double> weights =
        NormalizedWeights(targets, config.weight_floor);
    TraceFeatures tf(t.trace, t.theta, features);
    for (std::size_t k = 0; k < points.size(); ++k) {
      LossSample s;
      s.features = tf.Raw(points[k].index);
      norm.Apply(s.features);
      const TraceSample& sample = t.trace.samples[points[k].index];
      s.lower = sample.lower;
      s.upper = sample.upper;
      s.target = points[k].target;
      s.weight = weights[k];
      batch.samples.push_back(std::move(s));
    }
  }
  return batch;
}

FeatureNorm FitFeatureNorm(std::span<const TrainingTrace> traces,
                           const FeatureConfig& features,
                           const TrainingConfig& config) {
  const int dim = FeatureDimension(features);
  std::vector<double> sum(dim, 0.0);
  std::vector<double> sum_sq(dim, 0.0);
  double count = 0.0;
  std::vector<std::vector<double>> rows;
  for (const TrainingTrace& t : traces) {
    const double z_star = RequireOptimum(t);
    TraceFeatures tf(t.trace, t.theta, features);
    for (const SampledPoint& p : SamplePoints(t.trace, z_star, config)) {
      rows.push_back(tf.Raw(p.index));
    }
  }
  for (const auto& f : rows) {
    for (int k = 0; k < dim; ++k) sum[k] += f[k];
    count += 1.0;
  }
  FeatureNorm norm;
  norm.mean.assign(dim, 0.0);
  norm.stddev.assign(dim, 1.0);
  if (count == 0.0) return norm;
  for (int k = 0; k < dim; ++k) norm.mean[k] = sum[k] / count;
  for (const auto& f : rows) {
    for (int k = 0; k < dim; ++k) {
      const double d = f[k] - norm.mean[k];
      sum_sq[k] += d * d;
    }
  }
  for (int k = 0; k < dim; ++k) {
    const double sd = std::sqrt(sum_sq[k] / count);
    norm.stddev[k] = sd > 1e-12 ? sd : 1.0;
  }
  return norm;
}

namespace {

// Adds the gradient of scale * w * (phi - y)^2 for one sample and returns the
// unscaled residual term w * (phi - y)^2.
double SampleTerm(const Mlp& net, const LossSample& s, Mlp::Workspace& ws,
                  double scale, std::vector<double>* grad) {
  const double h = net.Forward(s.features, ws);
  const double width = s.upper - s.lower;
  const double sigma = Logistic(h);
  const double phi = width * sigma;
  const double r = phi - s.target;
  if (grad != nullptr) {
    const double d_out = scale * 2.0 * s.weight * r * width * sigma * (1.0 - sigma);
    if (d_out != 0.0) net.Backward(ws, d_out, *grad);
  }
  return s.weight * r * r;
}

}  // namespace

double BatchLoss(const Mlp& net, const LossBatch& batch,
                 std::vector<double>* grad) {
  if (batch.trace_count < 1) {
    throw Error(ErrorCode::kEmptyDataset, "loss over zero traces");
  }
  const double inv_d = 1.0 / batch.trace_count;
  if (grad != nullptr) grad->assign(net.num_params(), 0.0);
  Mlp::Workspace ws;
  double total = 0.0;
  for (const LossSample& s : batch.samples) {
    total += SampleTerm(net, s, ws, inv_d, grad);
  }
  return total * inv_d;
}

double EmpiricalLoss(const GapPredictorModel& model,
                     std::span<const TrainingTrace> traces,
                     const TrainingConfig& config) {
  const LossBatch batch =
      BuildLossBatch(traces, model.features, model.norm, config);
  return BatchLoss(model.net, batch);
}

GapPredictorModel Train(std::span<const TrainingTrace> traces,
                        const TrainingConfig& config,
                        const FeatureConfig& features) {
  config.Validate();
  if (traces.empty()) throw Error(ErrorCode::kEmptyDataset, "no traces");
  std::size_t validation = static_cast<std::size_t>(
      std::floor(config.validation_fraction * traces.size()));
  if (validation >= traces.size()) validation = 0;
  const auto train_part = traces.first(traces.size() - validation);
  const auto val_part = traces.last(validation);

  const FeatureNorm norm = FitFeatureNorm(train_part, features, config);
  GapPredictorModel model = InitModel(features, norm, config.hidden, config.seed);
  const LossBatch train_batch = BuildLossBatch(train_part, features, norm, config);
  if (train_batch.samples.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "no samples with an incumbent");
  }
  std::optional<LossBatch> val_batch;
  if (!val_part.empty()) {
    val_batch = BuildLossBatch(val_part, features, norm, config);
  }

  auto record = [&](const Mlp& net) {
    const double loss = BatchLoss(net, train_batch);
    if (!std::isfinite(loss)) {
      throw Error(ErrorCode::kNonFiniteLoss,
                  "training loss diverged after " +
                      std::to_string(model.train_loss.size()) + " evaluations");
    }
    model.train_loss.push_back(loss);
    if (val_batch) model.validation_loss.push_back(BatchLoss(net, *val_batch));
    return loss;
  };

  Mlp net = model.net;
  double best_loss = record(net);
  std::vector<double> best_params(net.params().begin(), net.params().end());

  const std::size_t p = net.num_params();
  std::vector<double> m(p, 0.0);
  std::vector<double> v(p, 0.0);
  std::vector<double> grad(p, 0.0);
  std::vector<std::size_t> order(train_batch.samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 engine(config.seed ^ 0x5bd1e995ULL);
  const double inv_d = 1.0 / train_batch.trace_count;
  const double total = static_cast<double>(order.size());
  std::int64_t step = 0;
  Mlp::Workspace ws;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), engine);
    for (std::size_t start = 0; start < order.size();
         start += config.batch_size) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      // Unbiased minibatch estimate of the full-loss gradient.
      const double scale = inv_d * total / static_cast<double>(end - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t k = start; k < end; ++k) {
        SampleTerm(net, train_batch.samples[order[k]], ws, scale, &grad);
      }
      ++step;
      const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      auto params = net.params();
      for (std::size_t k = 0; k < p; ++k) {
        m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * grad[k];
        v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * grad[k] * grad[k];
        params[k] -= config.step_size * (m[k] / c1) /
                     (std::sqrt(v[k] / c2) + config.adam_eps);
      }
    }
    const double loss = record(net);
    if (loss < best_loss) {
      best_loss = loss;
      best_params.assign(net.params().begin(), net.params().end());
    }
  }
  std::copy(best_params.begin(), best_params.end(), model.net.params().begin());
  return model;
}

GradientCheckResult GradientCheck(const GapPredictorModel& model,
                                  const LossBatch& batch, int subset_size,
                                  std::uint64_t seed) {
  if (subset_size < 1) {
    throw Error(ErrorCode::kInvalidArgument, "parameter subset must be nonempty");
  }
  if (batch.samples.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "gradient check needs samples");
  }
  Mlp net = model.net;
  for (double value : net.params()) {
    if (!std::isfinite(value)) {
      throw Error(ErrorCode::kInvalidArgument, "non-finite parameter");
    }
  }
  std::vector<double> analytic;
  const double loss = BatchLoss(net, batch, &analytic);
  const std::vector<std::uint8_t> base_pattern = ReluPattern(net, batch);
  const double floor = 1e-6 * std::max(std::abs(loss), 1e-12);

  std::vector<std::size_t> order(net.num_params());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 engine(seed);
  std::shuffle(order.begin(), order.end(), engine);

  GradientCheckResult result;
  const int wanted = std::min<int>(subset_size, static_cast<int>(order.size()));
  auto params = net.params();
  for (std::size_t idx : order) {
    if (result.checked >= wanted) break;
    const double original = params[idx];
    const double h = 1e-5 * std::max(1.0, std::abs(original));
    params[idx] = original + h;
    const double plus = BatchLoss(net, batch);
    const bool same_plus = ReluPattern(net, batch) == base_pattern;
    params[idx] = original - h;
    const double minus = BatchLoss(net, batch);
    const bool same_minus = ReluPattern(net, batch) == base_pattern;
    params[idx] = original;
    if (!same_plus || !same_minus) {
      ++result.skipped_at_kink;
      continue;
    }
    const double numeric = (plus - minus) / (2.0 * h);
    const double denom =
        std::max({std::abs(analytic[idx]), std::abs(numeric), floor});
    result.max_relative_error = std::max(
        result.max_relative_error, std::abs(analytic[idx] - numeric) / denom);
    ++result.checked;
  }
  return result;
}

}  // namespace cpstop
