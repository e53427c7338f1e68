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

#include "sweepret/optim.hpp"

#include <cmath>
#include <string>

namespace sweepret {

template <typename T>
AdamState<T>::AdamState(std::span<Parameter<T>* const> params, const AdamOptions& options)
    : learning_rate(options.learning_rate),
      beta1(options.beta1),
      beta2(options.beta2),
      epsilon(options.epsilon) {
  for (const Parameter<T>* p : params) {
    first_moment.emplace_back(p->value.shape);
    second_moment.emplace_back(p->value.shape);
  }
}

template <typename T>
void adam_step(std::span<Parameter<T>* const> params, AdamState<T>& state) {
  if (params.size() != state.first_moment.size() || params.size() != state.second_moment.size()) {
    throw Error(ErrorCode::kShapeMismatch, "adam",
                "optimizer state tracks " + std::to_string(state.first_moment.size()) +
                    " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter<T>& p = *params[i];
    if (p.grad.shape != p.value.shape || state.first_moment[i].shape != p.value.shape) {
      throw Error(ErrorCode::kShapeMismatch, p.name,
                  "gradient or moment shape does not match " + shape_str(p.value.shape));
    }
    for (T g : p.grad.data) {
      if (!std::isfinite(g)) {
        throw Error(ErrorCode::kNonFinite, p.name, "non-finite gradient");
      }
    }
  }

  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  const T b1 = static_cast<T>(state.beta1);
  const T b2 = static_cast<T>(state.beta2);
  const T step = static_cast<T>(state.learning_rate / bc1);
  const T inv_sqrt_bc2 = static_cast<T>(1.0 / std::sqrt(bc2));
  const T eps = static_cast<T>(state.epsilon);

  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter<T>& p = *params[i];
    auto& m = state.first_moment[i].data;
    auto& v = state.second_moment[i].data;
    for (std::size_t j = 0; j < p.value.data.size(); ++j) {
      const T g = p.grad.data[j];
      m[j] = b1 * m[j] + (T(1) - b1) * g;
      v[j] = b2 * v[j] + (T(1) - b2) * g * g;
      p.value.data[j] -= step * m[j] / (std::sqrt(v[j]) * inv_sqrt_bc2 + eps);
    }
  }
}

StepLR::StepLR(double base_lr, std::int64_t step_size, double gamma)
    : base_lr_(base_lr), step_size_(step_size), gamma_(gamma) {
  if (step_size <= 0 || base_lr <= 0 || gamma <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "StepLR",
                "base_lr, step_size and gamma must be positive");
  }
}

double StepLR::step() {
  ++epoch_;
  return learning_rate();
}

double StepLR::learning_rate() const {
  return base_lr_ * std::pow(gamma_, static_cast<double>(decays()));
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step<float>(std::span<Parameter<float>* const>, AdamState<float>&);
template void adam_step<double>(std::span<Parameter<double>* const>, AdamState<double>&);

}  // namespace sweepret
