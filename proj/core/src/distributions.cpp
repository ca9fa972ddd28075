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

#include "bfssm/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "bfssm/errors.hpp"
#include "bfssm/linalg.hpp"

namespace bfssm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)

// tr(V^-1 D^T U^-1 D) given Cholesky factors of U and V.
double mn_quadratic(const MatrixXd& d, const Eigen::LLT<MatrixXd>& u,
                    const Eigen::LLT<MatrixXd>& v) {
  const MatrixXd x = u.matrixL().solve(d);                 // L_U^-1 D
  const MatrixXd y = v.matrixL().solve(x.transpose());     // L_V^-1 D^T L_U^-T
  return y.squaredNorm();
}

}  // namespace

double log_multivariate_gamma(int n, double a) {
  double out = 0.25 * n * (n - 1) * std::log(std::numbers::pi);
  for (int j = 0; j < n; ++j) out += std::lgamma(a - 0.5 * j);
  return out;
}

void validate(const MatrixNormalParams& p) {
  require_square(p.row_cov, "matrix-normal row covariance");
  require_square(p.col_cov, "matrix-normal column covariance");
  if (p.mean.rows() != p.row_cov.rows() || p.mean.cols() != p.col_cov.rows()) {
    throw ShapeError("matrix-normal: mean is " + std::to_string(p.mean.rows()) + "x" +
                     std::to_string(p.mean.cols()) + " but covariances are " +
                     std::to_string(p.row_cov.rows()) + "x" + std::to_string(p.row_cov.rows()) +
                     " and " + std::to_string(p.col_cov.rows()) + "x" +
                     std::to_string(p.col_cov.rows()));
  }
}

void validate(const InverseWishartParams& p) {
  require_square(p.scale, "inverse-Wishart scale");
  const auto n = static_cast<double>(p.scale.rows());
  if (!(p.dof > n - 1.0)) {
    throw ParameterError("inverse-Wishart: dof " + std::to_string(p.dof) +
                         " must exceed n - 1 = " + std::to_string(n - 1.0));
  }
}

void validate(const MniwParams& p) {
  validate(InverseWishartParams{p.dof, p.scale});
  validate(MatrixNormalParams{p.mean, p.scale, p.col_cov});
}

double mvn_logpdf(const VectorXd& x, const VectorXd& mean, const MatrixXd& cov) {
  if (x.size() != mean.size() || cov.rows() != x.size()) {
    throw ShapeError("mvn_logpdf: dimension mismatch");
  }
  const auto llt = cholesky(cov, "mvn_logpdf covariance");
  const VectorXd z = llt.matrixL().solve(x - mean);
  return -0.5 * (static_cast<double>(x.size()) * kLog2Pi + log_det(llt) + z.squaredNorm());
}

double mn_logpdf(const MatrixXd& a, const MatrixNormalParams& p) {
  validate(p);
  if (a.rows() != p.mean.rows() || a.cols() != p.mean.cols()) {
    throw ShapeError("mn_logpdf: argument shape differs from mean");
  }
  const auto u = cholesky(p.row_cov, "matrix-normal row covariance");
  const auto v = cholesky(p.col_cov, "matrix-normal column covariance");
  const auto n = static_cast<double>(a.rows());
  const auto m = static_cast<double>(a.cols());
  return -0.5 * (n * m * kLog2Pi + n * log_det(v) + m * log_det(u) +
                 mn_quadratic(a - p.mean, u, v));
}

double iw_logpdf(const MatrixXd& q, const InverseWishartParams& p) {
  validate(p);
  if (q.rows() != p.scale.rows() || q.cols() != p.scale.cols()) {
    throw ShapeError("iw_logpdf: argument shape differs from scale");
  }
  const auto lq = cholesky(q, "iw_logpdf argument");
  const auto ls = cholesky(p.scale, "inverse-Wishart scale");
  const int n = static_cast<int>(q.rows());
  const double dof = p.dof;
  const double trace = lq.solve(p.scale).trace();
  return 0.5 * dof * log_det(ls) - 0.5 * (n + dof + 1.0) * log_det(lq) -
         0.5 * dof * n * std::numbers::ln2 - log_multivariate_gamma(n, 0.5 * dof) -
         0.5 * trace;
}

double mniw_logpdf(const MatrixXd& a, const MatrixXd& q, const MniwParams& p) {
  return mn_logpdf(a, MatrixNormalParams{p.mean, q, p.col_cov}) +
         iw_logpdf(q, InverseWishartParams{p.dof, p.scale});
}

VectorXd sample_mvn(RngStream& rng, const VectorXd& mean, const MatrixXd& cov) {
  if (cov.rows() != mean.size()) throw ShapeError("sample_mvn: dimension mismatch");
  const MatrixXd l = covariance_factor(cov, "sample_mvn covariance");
  VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return mean + l * z;
}

MatrixXd sample_mn(RngStream& rng, const MatrixNormalParams& p) {
  validate(p);
  const auto u = cholesky(p.row_cov, "matrix-normal row covariance");
  const auto v = cholesky(p.col_cov, "matrix-normal column covariance");
  MatrixXd z(p.mean.rows(), p.mean.cols());
  // Column-major fill keeps the draw order independent of Eigen internals.
  for (Eigen::Index j = 0; j < z.cols(); ++j)
    for (Eigen::Index i = 0; i < z.rows(); ++i) z(i, j) = rng.normal();
  return p.mean + MatrixXd(u.matrixL()) * z * MatrixXd(v.matrixL()).transpose();
}

MatrixXd sample_iw(RngStream& rng, const InverseWishartParams& p) {
  validate(p);
  const auto n = p.scale.rows();
  const auto ls = cholesky(p.scale, "inverse-Wishart scale");
  // Bartlett factor B of W(dof, I); then W(dof, scale^-1) = L^-T B B^T L^-1 with
  // scale = L L^T, so its inverse is (L B^-T)(L B^-T)^T.
  MatrixXd b = MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    b(i, i) = std::sqrt(rng.chi_squared(p.dof - static_cast<double>(i)));
    for (Eigen::Index j = 0; j < i; ++j) b(i, j) = rng.normal();
  }
  const MatrixXd b_inv_t =
      b.transpose().triangularView<Eigen::Upper>().solve(MatrixXd::Identity(n, n));
  const MatrixXd k = MatrixXd(ls.matrixL()) * b_inv_t;
  return symmetrize(k * k.transpose());
}

MniwDraw sample_mniw(RngStream& rng, const MniwParams& p) {
  validate(p);
  MatrixXd q = sample_iw(rng, InverseWishartParams{p.dof, p.scale});
  MatrixXd a = sample_mn(rng, MatrixNormalParams{p.mean, q, p.col_cov});
  return {std::move(a), std::move(q)};
}

CategoricalTable CategoricalTable::from_weights(std::span<const double> weights) {
  if (weights.empty()) throw WeightError("categorical: no weights");
  CategoricalTable table;
  table.cumulative_.resize(weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double w = weights[i];
    if (!(w >= 0.0) || std::isinf(w)) {
      throw WeightError("categorical: weight " + std::to_string(i) +
                        " is negative, infinite or NaN");
    }
    total += w;
    table.cumulative_[i] = total;
    if (w > 0.0) table.last_positive_ = i;
  }
  if (!(total > 0.0)) throw WeightError("categorical: all weights are zero");
  return table;
}

CategoricalTable CategoricalTable::from_log_weights(std::span<const double> log_weights) {
  double max_lw = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights) {
    if (std::isnan(lw)) throw WeightError("categorical: NaN log-weight");
    max_lw = std::max(max_lw, lw);
  }
  if (!std::isfinite(max_lw)) throw WeightError("categorical: all weights are zero");
  std::vector<double> w(log_weights.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_weights[i] - max_lw);
  return from_weights(w);
}

std::size_t CategoricalTable::draw(RngStream& rng) const {
  const double target = rng.uniform() * cumulative_.back();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
  // Rounding can put the target at the very top of the table.
  if (it == cumulative_.end()) return last_positive_;
  return static_cast<std::size_t>(it - cumulative_.begin());
}

std::size_t sample_categorical(RngStream& rng, std::span<const double> weights) {
  return CategoricalTable::from_weights(weights).draw(rng);
}

std::size_t sample_categorical_log(RngStream& rng, std::span<const double> log_weights) {
  return CategoricalTable::from_log_weights(log_weights).draw(rng);
}

}  // namespace bfssm
