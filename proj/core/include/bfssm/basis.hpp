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

#include <span>
#include <vector>

#include <Eigen/Core>

namespace bfssm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Box [-L_1, L_1] x ... x [-L_d, L_d] over the concatenated (state, input).
struct Domain {
  std::vector<double> half_widths;

  std::size_t dim() const { return half_widths.size(); }
  void validate() const;
};

/// Tensor-product basis: per-dimension counts and the enumerated 1-based
/// multi-indices in lexicographic order (first dimension varies slowest).
struct BasisSpec {
  std::vector<int> per_dim_count;
  std::vector<std::vector<int>> multi_indices;

  static BasisSpec tensor(std::vector<int> per_dim_count);
  /// Arbitrary subset of a tensor basis, kept in the given order.
  /// per_dim_count becomes the largest index used in each dimension.
  static BasisSpec from_indices(std::vector<std::vector<int>> multi_indices);
  /// True when multi_indices is the complete lexicographic tensor grid.
  bool is_full_tensor() const;

  std::size_t dim() const { return per_dim_count.size(); }
  std::size_t size() const { return multi_indices.size(); }
};

enum class CovarianceKind { SquaredExponential, Matern };

/// Isotropic stationary covariance kappa(r) with signal scale s_f and length
/// scale l. `nu` is only read for Matern.
struct CovarianceFunction {
  CovarianceKind kind = CovarianceKind::SquaredExponential;
  double s_f = 1.0;
  double length_scale = 1.0;
  double nu = 2.5;

  static CovarianceFunction squared_exponential(double s_f, double length_scale);
  static CovarianceFunction matern(double s_f, double length_scale, double nu);

  void validate() const;
  /// kappa(r) for distance r >= 0.
  double operator()(double r) const;
};

/// (1/sqrt(L)) sin(pi j (x + L) / (2 L)): Laplace eigenfunction on [-L, L]
/// with Dirichlet boundary. Defined for every real x.
double eval_basis_1d(int j, double x, double half_width);

/// Sum_k (pi j_k / (2 L_k))^2.
double eigenvalue(std::span<const int> index, const Domain& domain);

/// Spectral density of `cov` in `dim` dimensions, angular-frequency
/// convention: S(omega) = integral kappa(r) exp(-i omega.r) dr.
double spectral_density(const CovarianceFunction& cov, double omega, int dim = 1);

/// Diagonal prior column covariance with entries S(sqrt(lambda_j)).
MatrixXd build_prior_V(const BasisSpec& spec, const Domain& domain,
                       const CovarianceFunction& cov);

/// Basis specification bound to its domain; evaluates the regression vector.
class Basis {
 public:
  Basis() = default;
  Basis(BasisSpec spec, Domain domain);

  const BasisSpec& spec() const { return spec_; }
  const Domain& domain() const { return domain_; }
  std::size_t size() const { return spec_.size(); }
  std::size_t dim() const { return domain_.dim(); }

  /// Regression vector over concatenated (x, u). Throws ShapeError unless
  /// dim(x) + dim(u) == dim().
  VectorXd operator()(const VectorXd& x, const VectorXd& u) const;
  void evaluate(const VectorXd& x, const VectorXd& u, Eigen::Ref<VectorXd> out) const;

  /// True when every coordinate of (x, u) lies inside the domain.
  bool contains(const VectorXd& x, const VectorXd& u) const;

 private:
  void evaluate_subset(const VectorXd& x, const VectorXd& u, Eigen::Ref<VectorXd> out) const;

  BasisSpec spec_;
  Domain domain_;
  bool full_tensor_ = false;
};

VectorXd regression_vector(const BasisSpec& spec, const Domain& domain, const VectorXd& x,
                           const VectorXd& u);

}  // namespace bfssm
