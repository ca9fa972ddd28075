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

#include "bfssm/smc.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "bfssm/distributions.hpp"
#include "bfssm/errors.hpp"
#include "bfssm/linalg.hpp"

namespace bfssm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

struct GaussianTerm {
  MatrixXd factor;  // lower Cholesky factor
  double log_norm;  // -0.5 (n log 2 pi + log det)

  double logpdf(const VectorXd& residual) const {
    return log_norm - 0.5 * factor.triangularView<Eigen::Lower>().solve(residual).squaredNorm();
  }
};

GaussianTerm gaussian_term(const MatrixXd& cov, std::string_view what) {
  const auto llt = cholesky(cov, what);
  return {llt.matrixL(), -0.5 * (static_cast<double>(cov.rows()) * kLog2Pi + log_det(llt))};
}

VectorXd input_at(const ObservedData& data, Eigen::Index t) {
  if (data.u.rows() == 0) return VectorXd(0);
  return data.u.col(t);
}

void check_data(const ModelView& model, const ObservedData& data) {
  const auto& cfg = model.config();
  if (data.y.rows() != cfg.n_y) throw ShapeError("particle filter: y has wrong row count");
  if (data.u.rows() != cfg.n_u) throw ShapeError("particle filter: u has wrong row count");
  if (cfg.n_u > 0 && data.u.cols() != data.y.cols()) {
    throw ShapeError("particle filter: u and y horizons differ");
  }
}

// Shared particle recursion; `reference` == nullptr gives the bootstrap filter.
ParticleSystem run_filter(const MatrixXd* reference, const ModelView& model,
                          const ObservedData& data, std::size_t num_particles, RngStream& rng) {
  check_data(model, data);
  if (num_particles < 1) throw ParameterError("particle filter: need at least one particle");
  const auto& cfg = model.config();
  const Eigen::Index horizon = data.horizon();
  const auto n = static_cast<Eigen::Index>(num_particles);
  const Eigen::Index free = reference ? n - 1 : n;
  if (reference && (reference->cols() != horizon || reference->rows() != cfg.n_x)) {
    throw ShapeError("PGAS: reference trajectory must be n_x x T");
  }

  ParticleSystem ps;
  if (horizon == 0) return ps;
  ps.states.reserve(static_cast<std::size_t>(horizon));
  ps.log_weights.reserve(static_cast<std::size_t>(horizon));
  ps.ancestors.reserve(static_cast<std::size_t>(horizon - 1));

  const GaussianTerm obs = gaussian_term(cfg.observation.noise_cov, "observation noise R");
  std::vector<GaussianTerm> proc;
  for (const auto& s : model.theta().segments) {
    proc.push_back(gaussian_term(s.Q, "process noise Q"));
  }
  const MatrixXd init_factor = covariance_factor(cfg.initial.cov, "initial state covariance");

  MatrixXd current(cfg.n_x, n);
  VectorXd z(cfg.n_x);
  for (Eigen::Index i = 0; i < free; ++i) {
    for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = rng.normal();
    current.col(i) = cfg.initial.mean + init_factor * z;
  }
  if (reference) current.col(n - 1) = reference->col(0);

  MatrixXd means(cfg.n_x, n);
  std::vector<std::size_t> segs(num_particles);
  for (Eigen::Index t = 0; t < horizon; ++t) {
    const VectorXd u = input_at(data, t);
    const VectorXd y = data.y.col(t);
    VectorXd lw(n);
    double max_lw = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      const VectorXd x = current.col(i);
      lw[i] = obs.logpdf(y - cfg.observation(x, u));
      if (std::isnan(lw[i])) lw[i] = -std::numeric_limits<double>::infinity();
      max_lw = std::max(max_lw, lw[i]);
    }
    if (!std::isfinite(max_lw)) {
      throw DegeneracyError(static_cast<std::size_t>(t),
                            "particle filter: all weights vanished at t = " + std::to_string(t + 1));
    }
    ps.states.push_back(current);
    ps.log_weights.push_back(lw);
    if (t + 1 == horizon) break;

    for (Eigen::Index j = 0; j < n; ++j) {
      const VectorXd x = current.col(j);
      means.col(j) = model.transition_mean(x, u);
      segs[static_cast<std::size_t>(j)] = model.segment_of(x);
    }
    std::vector<std::size_t> anc(num_particles);
    MatrixXd next(cfg.n_x, n);
    const auto resampler = CategoricalTable::from_log_weights(
        std::span<const double>(lw.data(), static_cast<std::size_t>(n)));
    for (Eigen::Index i = 0; i < free; ++i) {
      const std::size_t a = resampler.draw(rng);
      for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = rng.normal();
      next.col(i) = means.col(static_cast<Eigen::Index>(a)) + proc[segs[a]].factor * z;
      if (!next.col(i).allFinite()) {
        throw PropagationError("particle filter: non-finite state at t = " + std::to_string(t + 2));
      }
      anc[static_cast<std::size_t>(i)] = a;
    }
    if (reference) {
      const VectorXd x_ref = reference->col(t + 1);
      next.col(n - 1) = x_ref;
      std::vector<double> las(num_particles);
      for (Eigen::Index j = 0; j < n; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        las[sj] = lw[j] + proc[segs[sj]].logpdf(x_ref - means.col(j));
      }
      try {
        anc[num_particles - 1] = sample_categorical_log(rng, las);
      } catch (const WeightError&) {
        throw DegeneracyError(static_cast<std::size_t>(t),
                              "PGAS: ancestor weights vanished at t = " + std::to_string(t + 1));
      }
    }
    ps.ancestors.push_back(std::move(anc));
    current = std::move(next);
  }
  return ps;
}

MatrixXd draw_final(const ParticleSystem& ps, RngStream& rng) {
  const VectorXd& lw = ps.log_weights.back();
  const std::size_t j =
      sample_categorical_log(rng, std::span<const double>(lw.data(), static_cast<std::size_t>(lw.size())));
  return ps.trace(j);
}

}  // namespace

MatrixXd ParticleSystem::trace(std::size_t i) const {
  const auto horizon = static_cast<Eigen::Index>(states.size());
  if (horizon == 0) return MatrixXd();
  MatrixXd out(states.front().rows(), horizon);
  std::size_t idx = i;
  for (Eigen::Index t = horizon - 1; t >= 0; --t) {
    out.col(t) = states[static_cast<std::size_t>(t)].col(static_cast<Eigen::Index>(idx));
    if (t > 0) idx = ancestors[static_cast<std::size_t>(t - 1)][idx];
  }
  return out;
}

ParticleSystem conditional_particle_filter(const MatrixXd& reference, const ModelView& model,
                                           const ObservedData& data, std::size_t num_particles,
                                           RngStream& rng) {
  return run_filter(&reference, model, data, num_particles, rng);
}

MatrixXd pgas_kernel(const MatrixXd& reference, const ModelView& model, const ObservedData& data,
                     const PgasConfig& config, RngStream& rng) {
  if (data.horizon() == 0) return reference;
  const ParticleSystem ps =
      run_filter(&reference, model, data, config.num_particles, rng);
  return draw_final(ps, rng);
}

ParticleSystem bootstrap_filter(const ModelView& model, const ObservedData& data,
                                std::size_t num_particles, RngStream& rng) {
  return run_filter(nullptr, model, data, num_particles, rng);
}

double loglik_bootstrap(const ModelView& model, const ObservedData& data,
                        std::size_t num_particles, RngStream& rng) {
  const ParticleSystem ps = run_filter(nullptr, model, data, num_particles, rng);
  double total = 0.0;
  for (const auto& lw : ps.log_weights) {
    const double max_lw = lw.maxCoeff();
    total += max_lw + std::log((lw.array() - max_lw).exp().mean());
  }
  return total;
}

MatrixXd bootstrap_trajectory(const ModelView& model, const ObservedData& data,
                              std::size_t num_particles, RngStream& rng) {
  const ParticleSystem ps = run_filter(nullptr, model, data, num_particles, rng);
  if (ps.states.empty()) return MatrixXd(model.config().n_x, 0);
  return draw_final(ps, rng);
}

}  // namespace bfssm
