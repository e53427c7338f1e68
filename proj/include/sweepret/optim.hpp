// Copyright 2026 The sweepret Authors
//
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

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sweepret/tensor.hpp"

namespace sweepret {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam moments and step counter, one moment pair per parameter in the order
/// the parameters were registered.
template <typename T>
struct AdamState {
  std::int64_t step_count = 0;
  std::vector<Tensor<T>> first_moment;
  std::vector<Tensor<T>> second_moment;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  AdamState(std::span<Parameter<T>* const> params, const AdamOptions& options);
};

/// One bias-corrected Adam update over `params` using their accumulated
/// gradients. A non-finite gradient throws before any parameter is modified.
template <typename T>
void adam_step(std::span<Parameter<T>* const> params, AdamState<T>& state);

/// Step decay: lr = base_lr * gamma^floor(epoch / step_size).
class StepLR {
 public:
  StepLR(double base_lr, std::int64_t step_size, double gamma);

  /// Advances one epoch and returns the new learning rate.
  double step();
  double learning_rate() const;
  std::int64_t epoch() const { return epoch_; }
  /// Number of decays applied so far.
  std::int64_t decays() const { return epoch_ / step_size_; }
  void set_epoch(std::int64_t epoch) { epoch_ = epoch; }

 private:
  double base_lr_;
  std::int64_t step_size_;
  double gamma_;
  std::int64_t epoch_ = 0;
};

}  // namespace sweepret
