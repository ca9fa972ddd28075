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

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "bfssm/rng.hpp"

namespace bfssm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// A ~ MN(M, U, V)  <=>  vec(A) ~ N(vec(M), V (x) U).
/// `row_cov` (U) is n_rows x n_rows, `col_cov` (V) is n_cols x n_cols.
struct MatrixNormalParams {
  MatrixXd mean;
  MatrixXd row_cov;
  MatrixXd col_cov;
};

/// Inverse-Wishart with `dof` > n - 1 and SPD `scale` (n x n).
struct InverseWishartParams {
  double dof = 0.0;
  MatrixXd scale;
};

/// Joint prior Q ~ IW(dof, scale), A | Q ~ MN(mean, Q, col_cov).
/// `mean` is n x m, `col_cov` is m x m, `scale` is n x n.
struct MniwParams {
  MatrixXd mean;
  MatrixXd col_cov;
  MatrixXd scale;
  double dof = 0.0;

  Eigen::Index state_dim() const { return scale.rows(); }
  Eigen::Index basis_dim() const { return col_cov.rows(); }
};

struct MniwDraw {
  MatrixXd A;
  MatrixXd Q;
};

/// log Gamma_n(a), the multivariate gamma function.
double log_multivariate_gamma(int n, double a);

double mvn_logpdf(const VectorXd& x, const VectorXd& mean, const MatrixXd& cov);
double mn_logpdf(const MatrixXd& a, const MatrixNormalParams& p);
double iw_logpdf(const MatrixXd& q, const InverseWishartParams& p);
/// log MN(A | M, Q, V) + log IW(Q | dof, scale).
double mniw_logpdf(const MatrixXd& a, const MatrixXd& q, const MniwParams& p);

/// Throws ShapeError / CovarianceError / ParameterError on invalid parameters.
void validate(const MatrixNormalParams& p);
void validate(const InverseWishartParams& p);
void validate(const MniwParams& p);

VectorXd sample_mvn(RngStream& rng, const VectorXd& mean, const MatrixXd& cov);
MatrixXd sample_mn(RngStream& rng, const MatrixNormalParams& p);
/// Bartlett decomposition of the Wishart with the inverse scale, inverted.
MatrixXd sample_iw(RngStream& rng, const InverseWishartParams& p);
MniwDraw sample_mniw(RngStream& rng, const MniwParams& p);

/// Cumulative weight table for repeated inverse-CDF draws from one
/// distribution (O(log n) per draw). Validation as in sample_categorical.
class CategoricalTable {
 public:
  static CategoricalTable from_weights(std::span<const double> weights);
  /// Weights exp(log_weights - max); entries may be -inf.
  static CategoricalTable from_log_weights(std::span<const double> log_weights);
  std::size_t draw(RngStream& rng) const;
  std::size_t size() const { return cumulative_.size(); }

 private:
  std::vector<double> cumulative_;
  std::size_t last_positive_ = 0;
};

/// Inverse-CDF draw of a 0-based index with P(j) = w_j / sum(w).
/// Throws WeightError if any weight is negative/NaN or all are zero.
std::size_t sample_categorical(RngStream& rng, std::span<const double> weights);

/// Same as sample_categorical on exp(log_weights - max). Entries may be -inf.
std::size_t sample_categorical_log(RngStream& rng, std::span<const double> log_weights);

}  // namespace bfssm
