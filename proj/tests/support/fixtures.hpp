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

// Small model builders shared by the test suites.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "bfssm/basis.hpp"
#include "bfssm/model.hpp"
#include "bfssm/rng.hpp"
#include "bfssm/smc.hpp"
#include "oracles.hpp"

namespace bfssm::fixture {

inline MatrixXd scalar(double v) { return MatrixXd::Constant(1, 1, v); }

/// n_x = n_y = 1, no input, y = x + N(0, r), x_1 ~ N(mean, init_var).
inline SsmConfig scalar_config(double r, double init_var, double init_mean = 0.0) {
  SsmConfig c;
  c.n_x = 1;
  c.n_u = 0;
  c.n_y = 1;
  c.observation.linear.state_gain = scalar(1.0);
  c.observation.noise_cov = scalar(r);
  c.initial.mean = Eigen::VectorXd::Constant(1, init_mean);
  c.initial.cov = scalar(init_var);
  return c;
}

/// Scalar linear-Gaussian system written as a basis model: known offset
/// h(x) = a x, zero coefficients, Q = q. The basis content is irrelevant.
struct LgssModel {
  SsmConfig config;
  Basis basis;
  Theta theta;
  Segmentation seg;
  ModelView view() const { return ModelView(config, basis, theta, seg); }
};

inline LgssModel lgss_model(const oracle::ScalarLgss& s) {
  LgssModel m;
  m.config = scalar_config(s.r, s.p0, s.m0);
  m.config.known_offset = LinearMap{scalar(s.a), MatrixXd()};
  m.basis = Basis(BasisSpec::tensor({1}), Domain{{10.0}});
  m.theta = Theta::zeros(1, 1, 1, scalar(s.q));
  return m;
}

/// One-function basis phi(x) = -sin(pi x / L) / sqrt(L) (index 2 on [-L, L]).
/// For |x| << L it is linear with slope linear_basis_slope(L).
inline Basis linear_basis(double half_width) {
  return Basis(BasisSpec::from_indices({{2}}), Domain{{half_width}});
}

inline double linear_basis_slope(double half_width) {
  return -std::numbers::pi / std::pow(half_width, 1.5);
}

/// Scalar LGSS observations y_1..y_T drawn directly, without the library.
inline std::vector<double> lgss_observations(const oracle::ScalarLgss& s, int horizon,
                                             std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n01;
  std::vector<double> y(static_cast<std::size_t>(horizon));
  double x = s.m0 + std::sqrt(s.p0) * n01(gen);
  for (auto& v : y) {
    v = x + std::sqrt(s.r) * n01(gen);
    x = s.a * x + std::sqrt(s.q) * n01(gen);
  }
  return y;
}

inline ObservedData as_observed(const std::vector<double>& y) {
  ObservedData d;
  d.u = MatrixXd(0, static_cast<Eigen::Index>(y.size()));
  d.y = Eigen::Map<const Eigen::RowVectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  return d;
}

/// Regression data z_t = a r_t + N(0, q) laid out as TransitionData with the
/// raw regressors r (m x n). `states` holds the first regressor row.
inline TransitionData regression_data(const MatrixXd& a, const MatrixXd& q, const MatrixXd& r,
                                      RngStream& rng) {
  TransitionData d;
  d.regressors = r;
  const Eigen::LLT<MatrixXd> llt(q);
  const MatrixXd lower = llt.matrixL();
  d.targets = a * r;
  for (Eigen::Index t = 0; t < r.cols(); ++t) {
    Eigen::VectorXd z(q.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
    d.targets.col(t) += lower * z;
  }
  d.states = r.topRows(1);
  return d;
}

}  // namespace bfssm::fixture
