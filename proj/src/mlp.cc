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

#include "cpstop/mlp.h"

#include <cmath>
#include <random>

#include "cpstop/error.h"

namespace cpstop {

Mlp::Mlp(std::vector<int> layer_sizes) : layer_sizes_(std::move(layer_sizes)) {
  if (layer_sizes_.size() < 2 || layer_sizes_.back() != 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "network needs >= 2 layers and a scalar output");
  }
  std::size_t total = 0;
  for (int l = 0; l + 1 < static_cast<int>(layer_sizes_.size()); ++l) {
    if (layer_sizes_[l] < 1 || layer_sizes_[l + 1] < 1) {
      throw Error(ErrorCode::kInvalidArgument, "layer sizes must be >= 1");
    }
    offsets_.push_back(total);
    total += static_cast<std::size_t>(layer_sizes_[l + 1]) *
             (layer_sizes_[l] + 1);
  }
  params_.assign(total, 0.0);
}

void Mlp::InitGlorot(std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  for (int l = 0; l < num_layers(); ++l) {
    const int in = layer_sizes_[l];
    const int out = layer_sizes_[l + 1];
    const double limit = std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    double* w = params_.data() + WeightOffset(l);
    for (int k = 0; k < in * out; ++k) w[k] = dist(engine);
    double* b = params_.data() + BiasOffset(l);
    for (int k = 0; k < out; ++k) b[k] = 0.0;
  }
}

double Mlp::Forward(std::span<const double> x) const {
  Workspace ws;
  return Forward(x, ws);
}

double Mlp::Forward(std::span<const double> x, Workspace& ws) const {
  const int layers = num_layers();
  ws.pre.resize(layers);
  ws.act.resize(layers + 1);
  ws.act[0].assign(x.begin(), x.end());
  for (int l = 0; l < layers; ++l) {
    const int in = layer_sizes_[l];
    const int out = layer_sizes_[l + 1];
    const double* w = params_.data() + WeightOffset(l);
    const double* b = params_.data() + BiasOffset(l);
    const std::vector<double>& a = ws.act[l];
    std::vector<double>& z = ws.pre[l];
    z.resize(out);
    for (int o = 0; o < out; ++o) {
      double s = b[o];
      const double* row = w + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) s += row[i] * a[i];
      z[o] = s;
    }
    std::vector<double>& next = ws.act[l + 1];
    next.resize(out);
    const bool hidden = l + 1 < layers;
    for (int o = 0; o < out; ++o) {
      next[o] = hidden ? (z[o] > 0.0 ? z[o] : 0.0) : z[o];
    }
  }
  return ws.act[layers][0];
}

void Mlp::Backward(const Workspace& ws, double d_out,
                   std::span<double> grad) const {
  const int layers = num_layers();
  std::vector<double> delta{d_out};
  std::vector<double> prev;
  for (int l = layers - 1; l >= 0; --l) {
    const int in = layer_sizes_[l];
    const int out = layer_sizes_[l + 1];
    const double* w = params_.data() + WeightOffset(l);
    double* gw = grad.data() + WeightOffset(l);
    double* gb = grad.data() + BiasOffset(l);
    const std::vector<double>& a = ws.act[l];
    for (int o = 0; o < out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      gb[o] += d;
      double* grow = gw + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) grow[i] += d * a[i];
    }
    if (l == 0) break;
    prev.assign(in, 0.0);
    for (int o = 0; o < out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* row = w + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) prev[i] += d * row[i];
    }
    // ReLU derivative, taken as 0 at the kink.
    const std::vector<double>& z = ws.pre[l - 1];
    for (int i = 0; i < in; ++i) {
      if (!(z[i] > 0.0)) prev[i] = 0.0;
    }
    delta.swap(prev);
  }
}

}  // namespace cpstop
