// Copyright 2026 The bfssm Authors
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

#include "bfssm/systems.hpp"

#include <cmath>
#include <numbers>

#include "bfssm/errors.hpp"

namespace bfssm::systems {

using std::numbers::pi;

namespace {

Generated allocate(long long horizon, int n_x, int n_u, int n_y) {
  if (horizon < 1) throw ParameterError("generate: T must be at least 1");
  const auto n = static_cast<Eigen::Index>(horizon);
  Generated g;
  g.data.t.resize(static_cast<std::size_t>(horizon));
  for (long long t = 0; t < horizon; ++t) g.data.t[static_cast<std::size_t>(t)] = t + 1;
  g.data.u = Eigen::MatrixXd::Zero(n_u, n);
  g.data.y = Eigen::MatrixXd::Zero(n_y, n);
  g.states = Eigen::MatrixXd::Zero(n_x, n);
  return g;
}

}  // namespace

double sinc(double z, SincConvention convention) {
  if (z == 0.0) return 1.0;
  const double a = convention == SincConvention::Normalized ? pi * z : z;
  return std::sin(a) / a;
}

double toy_transition(double x, SincConvention convention) {
  return 10.0 * sinc(x / 7.0, convention);
}

Eigen::Vector2d narendra_li_transition(const Eigen::Vector2d& x, double u) {
  const double x1 = x[0];
  const double x2 = x[1];
  return {(x1 / (1.0 + x1 * x1) + 1.0) * std::sin(x2),
          x2 * std::cos(x2) + x1 * std::exp(-(x1 * x1 + x2 * x2) / 8.0) +
              u * u * u / (1.0 + u * u + 0.5 * std::cos(x1 + x2))};
}

double narendra_li_output(const Eigen::Vector2d& x) {
  return x[0] / (1.0 + 0.5 * std::sin(x[1])) + x[1] / (1.0 + 0.5 * std::sin(x[0]));
}

double narendra_li_test_input(long long t) {
  const double td = static_cast<double>(t);
  return std::sin(2.0 * pi * td / 10.0) + std::sin(2.0 * pi * td / 25.0);
}

Generated generate_toy(long long horizon, RngStream& rng, SincConvention convention) {
  Generated g = allocate(horizon, 1, 0, 1);
  double x = std::sqrt(kToyInitialVar) * rng.normal();
  for (Eigen::Index t = 0; t < g.states.cols(); ++t) {
    g.states(0, t) = x;
    g.data.y(0, t) = x + std::sqrt(kToyMeasurementVar) * rng.normal();
    x = toy_transition(x, convention) + std::sqrt(kToyProcessVar) * rng.normal();
  }
  return g;
}

Generated generate_narendra_li(long long horizon, RngStream& rng, double noise_var,
                               bool test_input) {
  if (noise_var < 0.0) throw ParameterError("generate: noise variance must be >= 0");
  Generated g = allocate(horizon, 2, 1, 1);
  Eigen::Vector2d x = Eigen::Vector2d::Zero();
  const double noise_sd = std::sqrt(noise_var);
  for (Eigen::Index t = 0; t < g.states.cols(); ++t) {
    const double u = test_input ? narendra_li_test_input(g.data.t[static_cast<std::size_t>(t)])
                                : -2.5 + 5.0 * rng.uniform();
    g.data.u(0, t) = u;
    g.states.col(t) = x;
    g.data.y(0, t) = narendra_li_output(x) + (noise_sd > 0.0 ? noise_sd * rng.normal() : 0.0);
    x = narendra_li_transition(x, u);
  }
  return g;
}

Generated generate_lgss(long long horizon, RngStream& rng, double measurement_var) {
  if (measurement_var < 0.0) throw ParameterError("generate: noise variance must be >= 0");
  Generated g = allocate(horizon, 1, 0, 1);
  double x = std::sqrt(kLgssInitialVar) * rng.normal();
  for (Eigen::Index t = 0; t < g.states.cols(); ++t) {
    g.states(0, t) = x;
    g.data.y(0, t) = x + std::sqrt(measurement_var) * rng.normal();
    x = kLgssCoefficient * x + std::sqrt(kLgssProcessVar) * rng.normal();
  }
  return g;
}

}  // namespace bfssm::systems
