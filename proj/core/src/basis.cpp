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

#include "bfssm/basis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "bfssm/errors.hpp"

namespace bfssm {

using std::numbers::pi;

void Domain::validate() const {
  if (half_widths.empty()) throw ParameterError("domain: no dimensions");
  for (std::size_t k = 0; k < half_widths.size(); ++k) {
    if (!(half_widths[k] > 0.0) || !std::isfinite(half_widths[k])) {
      throw ParameterError("domain: half width " + std::to_string(k) + " must be positive");
    }
  }
}

BasisSpec BasisSpec::tensor(std::vector<int> per_dim_count) {
  if (per_dim_count.empty()) throw ParameterError("basis: no dimensions");
  std::size_t total = 1;
  for (int c : per_dim_count) {
    if (c < 1) throw ParameterError("basis: per-dimension count must be >= 1");
    total *= static_cast<std::size_t>(c);
  }
  BasisSpec spec;
  spec.per_dim_count = std::move(per_dim_count);
  spec.multi_indices.reserve(total);
  std::vector<int> index(spec.per_dim_count.size(), 1);
  for (std::size_t n = 0; n < total; ++n) {
    spec.multi_indices.push_back(index);
    // Odometer increment, last dimension fastest.
    for (std::size_t k = index.size(); k-- > 0;) {
      if (++index[k] <= spec.per_dim_count[k]) break;
      index[k] = 1;
    }
  }
  return spec;
}

BasisSpec BasisSpec::from_indices(std::vector<std::vector<int>> multi_indices) {
  if (multi_indices.empty()) throw ParameterError("basis: empty index list");
  const std::size_t d = multi_indices.front().size();
  if (d == 0) throw ParameterError("basis: no dimensions");
  BasisSpec spec;
  spec.per_dim_count.assign(d, 1);
  for (const auto& index : multi_indices) {
    if (index.size() != d) throw ShapeError("basis: multi-indices of different lengths");
    for (std::size_t k = 0; k < d; ++k) {
      if (index[k] < 1) throw ParameterError("basis: multi-index entries must be >= 1");
      spec.per_dim_count[k] = std::max(spec.per_dim_count[k], index[k]);
    }
  }
  std::vector<std::vector<int>> sorted = multi_indices;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ParameterError("basis: duplicate multi-index");
  }
  spec.multi_indices = std::move(multi_indices);
  return spec;
}

bool BasisSpec::is_full_tensor() const {
  std::size_t total = 1;
  for (int c : per_dim_count) total *= static_cast<std::size_t>(c);
  if (total != multi_indices.size()) return false;
  return multi_indices == tensor(per_dim_count).multi_indices;
}

CovarianceFunction CovarianceFunction::squared_exponential(double s_f, double length_scale) {
  CovarianceFunction c{CovarianceKind::SquaredExponential, s_f, length_scale, 0.0};
  c.validate();
  return c;
}

CovarianceFunction CovarianceFunction::matern(double s_f, double length_scale, double nu) {
  CovarianceFunction c{CovarianceKind::Matern, s_f, length_scale, nu};
  c.validate();
  return c;
}

void CovarianceFunction::validate() const {
  if (!(s_f > 0.0)) throw ParameterError("covariance: s_f must be positive");
  if (!(length_scale > 0.0)) throw ParameterError("covariance: length scale must be positive");
  if (kind == CovarianceKind::Matern && !(nu > 0.0)) {
    throw ParameterError("covariance: Matern nu must be positive");
  }
}

double CovarianceFunction::operator()(double r) const {
  r = std::abs(r);
  const double l = length_scale;
  if (kind == CovarianceKind::SquaredExponential) {
    return s_f * std::exp(-r * r / (2.0 * l * l));
  }
  if (nu == 0.5) return s_f * std::exp(-r / l);
  if (nu == 1.5) {
    const double z = std::sqrt(3.0) * r / l;
    return s_f * (1.0 + z) * std::exp(-z);
  }
  if (nu == 2.5) {
    const double z = std::sqrt(5.0) * r / l;
    return s_f * (1.0 + z + z * z / 3.0) * std::exp(-z);
  }
  if (nu == 3.5) {
    const double z = std::sqrt(7.0) * r / l;
    return s_f * (1.0 + z + 2.0 * z * z / 5.0 + z * z * z / 15.0) * std::exp(-z);
  }
  if (r == 0.0) return s_f;
  const double z = std::sqrt(2.0 * nu) * r / l;
  return s_f * std::exp((1.0 - nu) * std::numbers::ln2 - std::lgamma(nu) + nu * std::log(z)) *
         std::cyl_bessel_k(nu, z);
}

double eval_basis_1d(int j, double x, double half_width) {
  return std::sin(pi * j * (x + half_width) / (2.0 * half_width)) / std::sqrt(half_width);
}

double eigenvalue(std::span<const int> index, const Domain& domain) {
  if (index.size() != domain.dim()) throw ShapeError("eigenvalue: index/domain dimension mismatch");
  double lambda = 0.0;
  for (std::size_t k = 0; k < index.size(); ++k) {
    const double w = pi * index[k] / (2.0 * domain.half_widths[k]);
    lambda += w * w;
  }
  return lambda;
}

double spectral_density(const CovarianceFunction& cov, double omega, int dim) {
  const double l = cov.length_scale;
  const double d = dim;
  if (cov.kind == CovarianceKind::SquaredExponential) {
    return cov.s_f * std::pow(2.0 * pi * l * l, 0.5 * d) * std::exp(-0.5 * l * l * omega * omega);
  }
  const double nu = cov.nu;
  const double log_s = d * std::numbers::ln2 + 0.5 * d * std::log(pi) + std::lgamma(nu + 0.5 * d) +
                       nu * std::log(2.0 * nu) - std::lgamma(nu) - 2.0 * nu * std::log(l) -
                       (nu + 0.5 * d) * std::log(2.0 * nu / (l * l) + omega * omega);
  return cov.s_f * std::exp(log_s);
}

MatrixXd build_prior_V(const BasisSpec& spec, const Domain& domain,
                       const CovarianceFunction& cov) {
  domain.validate();
  cov.validate();
  if (spec.dim() != domain.dim()) throw ShapeError("build_prior_V: spec/domain dimension mismatch");
  const auto m = static_cast<Eigen::Index>(spec.size());
  MatrixXd v = MatrixXd::Zero(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double lambda = eigenvalue(spec.multi_indices[static_cast<std::size_t>(j)], domain);
    // Floor keeps V invertible when the density underflows for very large j.
    v(j, j) = std::max(spectral_density(cov, std::sqrt(lambda), static_cast<int>(domain.dim())),
                       1e-300);
  }
  return v;
}

Basis::Basis(BasisSpec spec, Domain domain) : spec_(std::move(spec)), domain_(std::move(domain)) {
  domain_.validate();
  if (spec_.dim() != domain_.dim()) throw ShapeError("basis: spec/domain dimension mismatch");
  full_tensor_ = spec_.is_full_tensor();
}

void Basis::evaluate(const VectorXd& x, const VectorXd& u, Eigen::Ref<VectorXd> out) const {
  const auto d = static_cast<Eigen::Index>(dim());
  if (x.size() + u.size() != d) {
    throw ShapeError("regression vector: dim(x) + dim(u) = " + std::to_string(x.size() + u.size()) +
                     ", basis expects " + std::to_string(d));
  }
  if (out.size() != static_cast<Eigen::Index>(size())) {
    throw ShapeError("regression vector: output has wrong length");
  }
  if (!full_tensor_) {
    evaluate_subset(x, u, out);
    return;
  }
  // Kronecker product of the per-dimension factor vectors, built in place.
  out[0] = 1.0;
  Eigen::Index filled = 1;
  for (Eigen::Index k = 0; k < d; ++k) {
    const double z = k < x.size() ? x[k] : u[k - x.size()];
    const double half = domain_.half_widths[static_cast<std::size_t>(k)];
    const int count = spec_.per_dim_count[static_cast<std::size_t>(k)];
    double factors[64];
    std::vector<double> heap;
    double* f = factors;
    if (count > 64) {
      heap.resize(static_cast<std::size_t>(count));
      f = heap.data();
    }
    for (int j = 0; j < count; ++j) f[j] = eval_basis_1d(j + 1, z, half);
    for (Eigen::Index i = filled; i-- > 0;) {
      const double prev = out[i];
      for (int j = count; j-- > 0;) out[i * count + j] = prev * f[j];
    }
    filled *= count;
  }
}

void Basis::evaluate_subset(const VectorXd& x, const VectorXd& u, Eigen::Ref<VectorXd> out) const {
  const std::size_t d = dim();
  std::vector<std::vector<double>> factors(d);
  for (std::size_t k = 0; k < d; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const double z = kk < x.size() ? x[kk] : u[kk - x.size()];
    factors[k].resize(static_cast<std::size_t>(spec_.per_dim_count[k]));
    for (int j = 0; j < spec_.per_dim_count[k]; ++j) {
      factors[k][static_cast<std::size_t>(j)] = eval_basis_1d(j + 1, z, domain_.half_widths[k]);
    }
  }
  for (std::size_t n = 0; n < spec_.size(); ++n) {
    double v = 1.0;
    for (std::size_t k = 0; k < d; ++k) {
      v *= factors[k][static_cast<std::size_t>(spec_.multi_indices[n][k] - 1)];
    }
    out[static_cast<Eigen::Index>(n)] = v;
  }
}

VectorXd Basis::operator()(const VectorXd& x, const VectorXd& u) const {
  VectorXd out(static_cast<Eigen::Index>(size()));
  evaluate(x, u, out);
  return out;
}

bool Basis::contains(const VectorXd& x, const VectorXd& u) const {
  for (Eigen::Index k = 0; k < x.size() + u.size(); ++k) {
    const double z = k < x.size() ? x[k] : u[k - x.size()];
    if (std::abs(z) > domain_.half_widths[static_cast<std::size_t>(k)]) return false;
  }
  return true;
}

VectorXd regression_vector(const BasisSpec& spec, const Domain& domain, const VectorXd& x,
                           const VectorXd& u) {
  return Basis(spec, domain)(x, u);
}

}  // namespace bfssm
