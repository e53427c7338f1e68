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

#include <doctest.h>

#include <cmath>
#include <limits>

#include "sweepret/error.hpp"
#include "sweepret/optim.hpp"

using namespace sweepret;

TEST_CASE("zero gradient leaves parameters and moments unchanged") {
  Parameter<double> p("w", Tensor<double>(Shape{3}, std::vector<double>{1.0, -2.0, 0.5}));
  std::vector<Parameter<double>*> ps{&p};
  AdamState<double> st(ps, AdamOptions{});
  const auto before = p.value;
  adam_step<double>(ps, st);
  CHECK(p.value == before);
  CHECK(st.step_count == 1);
  for (double m : st.first_moment[0].data) CHECK(m == 0.0);
  for (double v : st.second_moment[0].data) CHECK(v == 0.0);
}

TEST_CASE("first Adam step with unit gradient moves by the learning rate") {
  Parameter<double> p("w", Tensor<double>(Shape{}, 0.0));
  std::vector<Parameter<double>*> ps{&p};
  AdamState<double> st(ps, AdamOptions{1e-3, 0.9, 0.999, 1e-8});
  p.grad[0] = 1.0;
  adam_step<double>(ps, st);
  // m_hat = 1, v_hat = 1 -> step = lr / (1 + eps)
  CHECK(p.value[0] == doctest::Approx(-1e-3 / (1.0 + 1e-8)).epsilon(1e-12));
  CHECK(st.first_moment[0].shape == p.value.shape);
}

TEST_CASE("Adam matches a hand-rolled update over several steps") {
  Parameter<double> p("w", Tensor<double>(Shape{2}, std::vector<double>{0.3, -0.7}));
  std::vector<Parameter<double>*> ps{&p};
  AdamState<double> st(ps, AdamOptions{0.01, 0.9, 0.999, 1e-8});
  double x[2] = {0.3, -0.7}, m[2] = {0, 0}, v[2] = {0, 0};
  for (int t = 1; t <= 5; ++t) {
    for (int i = 0; i < 2; ++i) {
      const double g = 2.0 * x[i];
      p.grad[i] = g;
      m[i] = 0.9 * m[i] + 0.1 * g;
      v[i] = 0.999 * v[i] + 0.001 * g * g;
      const double mh = m[i] / (1 - std::pow(0.9, t)), vh = v[i] / (1 - std::pow(0.999, t));
      x[i] -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    }
    adam_step<double>(ps, st);
  }
  CHECK(p.value[0] == doctest::Approx(x[0]).epsilon(1e-12));
  CHECK(p.value[1] == doctest::Approx(x[1]).epsilon(1e-12));
}

TEST_CASE("non-finite gradients abort the step and name the parameter") {
  Parameter<float> a("layer.a", Tensor<float>(Shape{2}, 1.0f));
  Parameter<float> b("layer.b", Tensor<float>(Shape{2}, 1.0f));
  std::vector<Parameter<float>*> ps{&a, &b};
  AdamState<float> st(ps, AdamOptions{});
  a.grad[0] = 1.0f;
  b.grad[1] = std::numeric_limits<float>::quiet_NaN();
  try {
    adam_step<float>(ps, st);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNonFinite);
    CHECK(e.context() == "layer.b");
  }
  CHECK(a.value[0] == 1.0f);
  CHECK(st.step_count == 0);
}

TEST_CASE("step decay schedule") {
  StepLR s(1e-3, 100, 0.95);
  CHECK(s.learning_rate() == 1e-3);
  for (int i = 0; i < 99; ++i) s.step();
  CHECK(s.learning_rate() == 1e-3);
  s.step();
  CHECK(s.learning_rate() == doctest::Approx(1e-3 * 0.95).epsilon(1e-15));
  for (int i = 0; i < 100; ++i) s.step();
  CHECK(s.decays() == 2);
  CHECK(s.learning_rate() == doctest::Approx(1e-3 * 0.95 * 0.95).epsilon(1e-15));
}
