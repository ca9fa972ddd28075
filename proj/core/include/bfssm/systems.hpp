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

#pragma once

#include <Eigen/Core>

#include "bfssm/io.hpp"
#include "bfssm/rng.hpp"

namespace bfssm::systems {

enum class SincConvention { Normalized, Unnormalized };

/// sin(pi z)/(pi z) (normalized) or sin(z)/z, with value 1 at z = 0.
double sinc(double z, SincConvention convention = SincConvention::Normalized);

/// x_{t+1} = 10 sinc(x_t / 7) + v_t, v ~ N(0, 4); y_t = x_t + e_t, e ~ N(0, 4).
double toy_transition(double x, SincConvention convention = SincConvention::Normalized);
inline constexpr double kToyProcessVar = 4.0;
inline constexpr double kToyMeasurementVar = 4.0;
/// x_1 ~ N(0, 4).
inline constexpr double kToyInitialVar = 4.0;

Eigen::Vector2d narendra_li_transition(const Eigen::Vector2d& x, double u);
double narendra_li_output(const Eigen::Vector2d& x);
/// sin(2 pi t / 10) + sin(2 pi t / 25).
double narendra_li_test_input(long long t);

/// x_{t+1} = 0.9 x_t + v_t, v ~ N(0, 0.1); y_t = x_t + e_t; x_1 ~ N(0, 1).
inline constexpr double kLgssCoefficient = 0.9;
inline constexpr double kLgssProcessVar = 0.1;
inline constexpr double kLgssMeasurementVar = 0.1;
inline constexpr double kLgssInitialVar = 1.0;

struct Generated {
  Dataset data;
  Eigen::MatrixXd states;  // n_x x T
};

Generated generate_toy(long long horizon, RngStream& rng,
                       SincConvention convention = SincConvention::Normalized);

/// x_1 = 0. Training input iid U[-2.5, 2.5], or the sinusoidal test input.
/// `noise_var` is the measurement noise variance (0 for the noise-free case).
Generated generate_narendra_li(long long horizon, RngStream& rng, double noise_var,
                               bool test_input);

Generated generate_lgss(long long horizon, RngStream& rng,
                        double measurement_var = kLgssMeasurementVar);

}  // namespace bfssm::systems
