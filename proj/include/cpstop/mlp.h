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

#ifndef CPSTOP_MLP_H_
#define CPSTOP_MLP_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cpstop {

// Fully connected network, ReLU on hidden layers, linear scalar output.
// All weights and biases live in one flat vector: per layer, the out x in
// weight matrix (row-major) followed by the out biases.
class Mlp {
 public:
  struct Workspace {
    // Pre-activations and activations per layer; act[0] is the input.
    std::vector<std::vector<double>> pre;
    std::vector<std::vector<double>> act;
  };

  Mlp() = default;
  explicit Mlp(std::vector<int> layer_sizes);

  // Uniform in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  void InitGlorot(std::uint64_t seed);

  const std::vector<int>& layer_sizes() const { return layer_sizes_; }
  int num_layers() const { return static_cast<int>(layer_sizes_.size()) - 1; }
  int input_dim() const { return layer_sizes_.front(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t num_params() const { return params_.size(); }

  std::size_t WeightOffset(int layer) const { return offsets_[layer]; }
  std::size_t BiasOffset(int layer) const {
    return offsets_[layer] +
           static_cast<std::size_t>(layer_sizes_[layer + 1]) *
               layer_sizes_[layer];
  }

  double Forward(std::span<const double> x) const;
  double Forward(std::span<const double> x, Workspace& ws) const;

  // Accumulates d_out * d(output)/d(params) into grad, using the activations
  // of the last Forward(x, ws) call.
  void Backward(const Workspace& ws, double d_out, std::span<double> grad) const;

 private:
  std::vector<int> layer_sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

}  // namespace cpstop

#endif  // CPSTOP_MLP_H_
