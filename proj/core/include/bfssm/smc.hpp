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
#include <vector>

#include <Eigen/Core>

#include "bfssm/model.hpp"
#include "bfssm/rng.hpp"

namespace bfssm {

/// Inputs (n_u x T, zero rows when n_u = 0) and outputs (n_y x T).
struct ObservedData {
  MatrixXd u;
  MatrixXd y;

  Eigen::Index horizon() const { return y.cols(); }
};

/// Resampling inside the kernel is always multinomial.
struct PgasConfig {
  std::size_t num_particles = 20;
};

/// N weighted particle paths over T steps. Particle N-1 (0-based) is the
/// reference in a conditional run.
struct ParticleSystem {
  std::vector<MatrixXd> states;                      // T entries, n_x x N
  std::vector<std::vector<std::size_t>> ancestors;   // T-1 entries, N each
  std::vector<VectorXd> log_weights;                 // T entries, N each

  std::size_t num_particles() const { return states.empty() ? 0 : states.front().cols(); }
  std::size_t horizon() const { return states.size(); }
  /// Ancestral path of particle `i` at the final step, n_x x T.
  MatrixXd trace(std::size_t i) const;
};

/// Conditional particle filter with ancestor sampling. Returns the full
/// particle system; `reference` is n_x x T.
ParticleSystem conditional_particle_filter(const MatrixXd& reference, const ModelView& model,
                                           const ObservedData& data, std::size_t num_particles,
                                           RngStream& rng);

/// One PGAS Markov kernel application: a new trajectory drawn from the
/// conditional particle system. With N = 1 the reference is returned as is.
MatrixXd pgas_kernel(const MatrixXd& reference, const ModelView& model, const ObservedData& data,
                     const PgasConfig& config, RngStream& rng);

/// Unconditional bootstrap particle filter.
ParticleSystem bootstrap_filter(const ModelView& model, const ObservedData& data,
                                std::size_t num_particles, RngStream& rng);

/// log of the standard (unbiased) SMC likelihood estimate of p(y_{1:T} | theta).
double loglik_bootstrap(const ModelView& model, const ObservedData& data,
                        std::size_t num_particles, RngStream& rng);

/// One trajectory drawn from a bootstrap filter run (final-weight draw, traced back).
MatrixXd bootstrap_trajectory(const ModelView& model, const ObservedData& data,
                              std::size_t num_particles, RngStream& rng);

}  // namespace bfssm
