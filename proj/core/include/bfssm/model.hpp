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
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "bfssm/basis.hpp"
#include "bfssm/distributions.hpp"
#include "bfssm/rng.hpp"

namespace bfssm {

using VectorFunction = std::function<VectorXd(const VectorXd& x, const VectorXd& u)>;

/// z = state_gain * x + input_gain * u. An empty input_gain means no input term.
struct LinearMap {
  MatrixXd state_gain;
  MatrixXd input_gain;

  VectorXd operator()(const VectorXd& x, const VectorXd& u) const;
};

/// Known observation map g with additive N(0, noise_cov) noise. When `custom`
/// is set it replaces the linear map.
struct ObservationModel {
  LinearMap linear;
  VectorFunction custom;
  MatrixXd noise_cov;

  VectorXd operator()(const VectorXd& x, const VectorXd& u) const;
};

/// Gaussian p(x_1); an all-zero covariance is a point mass at `mean`.
struct InitialState {
  VectorXd mean;
  MatrixXd cov;

  bool is_point_mass() const { return cov.isZero(0.0); }
};

struct SsmConfig {
  int n_x = 1;
  int n_u = 0;
  int n_y = 1;
  ObservationModel observation;
  InitialState initial;
  /// Known function h(x, u) added to the transition.
  std::optional<LinearMap> known_offset;

  void validate() const;
  VectorXd offset(const VectorXd& x, const VectorXd& u) const;
};

/// Discontinuity points on state dimension `dim`. Segment i covers
/// [p_i, p_{i+1}) with p_0 = -inf and p_{n_p+1} = +inf.
struct Segmentation {
  int dim = 0;
  std::vector<double> points;

  std::size_t num_points() const { return points.size(); }
  std::size_t num_segments() const { return points.size() + 1; }
  std::size_t segment_of(double coordinate) const;
  std::size_t segment_of(const VectorXd& x) const { return segment_of(x[dim]); }
  void validate(int n_x) const;

  friend bool operator==(const Segmentation&, const Segmentation&) = default;
};

struct SegmentParams {
  MatrixXd A;  // n_x x m
  MatrixXd Q;  // n_x x n_x
};

struct Theta {
  std::vector<SegmentParams> segments;

  static Theta zeros(std::size_t num_segments, int n_x, std::size_t m, const MatrixXd& q);
  void validate(int n_x, std::size_t m, std::size_t num_segments) const;
};

/// Phi = sum z z^T, Psi = sum z phi^T, Sigma = sum phi phi^T over the
/// contributing transitions, with z the offset-corrected next state. `count`
/// is real-valued so that stochastic-approximation averages stay representable.
struct SuffStats {
  MatrixXd Phi;
  MatrixXd Psi;
  MatrixXd Sigma;
  double count = 0.0;

  static SuffStats zeros(int n_x, std::size_t m);
  bool empty() const { return count == 0.0; }

  SuffStats& operator+=(const SuffStats& other);
  friend SuffStats operator+(SuffStats a, const SuffStats& b) { return a += b; }
  /// (1 - gamma) * this + gamma * fresh.
  SuffStats blend(const SuffStats& fresh, double gamma) const;
};

/// Transitions of one trajectory laid out column-wise, ready for
/// re-segmentation without re-evaluating the basis.
struct TransitionData {
  MatrixXd regressors;   // m x (T-1): phi(x_t, u_t)
  MatrixXd targets;      // n_x x (T-1): x_{t+1} - h(x_t, u_t)
  MatrixXd states;       // n_x x (T-1): x_t
};

/// Prior over (A_i, Q_i) per segment and over the discontinuity points.
/// Free points: count ~ Geometric(geometric_p) on {0, 1, ...}; locations iid
/// uniform on [lower, upper], or uniform over distinct `grid` points when the
/// grid is non-empty. `pinned` points are fixed and never moved.
struct SegPrior {
  MniwParams mniw;
  double geometric_p = 0.5;
  double lower = -1.0;
  double upper = 1.0;
  std::vector<double> grid;
  std::vector<double> pinned;

  void validate() const;
  /// log p(xi) over the free points of `seg` (up to a constant); -inf outside
  /// the support.
  double log_prior(const Segmentation& seg) const;
  std::vector<double> free_points(const Segmentation& seg) const;
};

/// Non-owning view of a fully specified model (config, basis, parameters,
/// segmentation). The referenced objects must outlive the view.
class ModelView {
 public:
  ModelView(const SsmConfig& config, const Basis& basis, const Theta& theta,
            const Segmentation& seg);

  const SsmConfig& config() const { return *config_; }
  const Basis& basis() const { return *basis_; }
  const Theta& theta() const { return *theta_; }
  const Segmentation& segmentation() const { return *seg_; }

  /// h(x, u) + A_i phi(x, u) with i the segment containing x[dim].
  VectorXd transition_mean(const VectorXd& x, const VectorXd& u) const;
  std::size_t segment_of(const VectorXd& x) const { return seg_->segment_of(x); }

 private:
  const SsmConfig* config_;
  const Basis* basis_;
  const Theta* theta_;
  const Segmentation* seg_;
};

VectorXd transition_mean(const Theta& theta, const Segmentation& seg, const Basis& basis,
                         const SsmConfig& config, const VectorXd& x, const VectorXd& u);

struct Simulation {
  MatrixXd x;  // n_x x T
  MatrixXd y;  // n_y x T
};

/// Draws x_1 from p(x_1), then x_{t+1} = f(x_t, u_t) + v_t and y_t = g(x_t, u_t) + e_t.
/// Zero Q or R are allowed here and give noise-free recursions.
/// `inputs` is n_u x T (zero rows when n_u = 0).
Simulation simulate(const ModelView& model, const MatrixXd& inputs, RngStream& rng);

/// Deterministic run: x_1 = initial mean, no process or measurement noise.
Simulation simulate_noise_free(const ModelView& model, const MatrixXd& inputs);

TransitionData make_transition_data(const MatrixXd& x, const MatrixXd& u, const Basis& basis,
                                    const SsmConfig& config);

std::vector<SuffStats> stats_for(const TransitionData& data, const Segmentation& seg);

/// Statistics over transitions t = 1..T-1, one entry per segment; transition t
/// belongs to the segment containing x_t.
std::vector<SuffStats> compute_stats(const MatrixXd& x, const MatrixXd& u, const Basis& basis,
                                     const SsmConfig& config, const Segmentation& seg);

/// Conjugate MNIW update. Empty statistics return the prior unchanged.
MniwParams posterior_mniw(const SuffStats& stats, const MniwParams& prior);

/// log p(x | A, Q) for the transitions summarized in `stats`.
double transition_loglik(const MatrixXd& a, const MatrixXd& q, const SuffStats& stats);

/// log p(A, Q | x) up to an additive constant that depends only on the data.
double log_joint(const MatrixXd& a, const MatrixXd& q, const SuffStats& stats,
                 const MniwParams& prior);

/// log p(x_segment) via Bayes' rule at an arbitrary valid point (A*, Q*).
double log_marglik_segment(const SuffStats& stats, const MniwParams& prior, const MatrixXd& a_eval,
                           const MatrixXd& q_eval);
/// Same, evaluated at the posterior mode.
double log_marglik_segment(const SuffStats& stats, const MniwParams& prior);

/// log p(x_segment | Q) with only A integrated out (known process covariance).
double log_marglik_segment_given_q(const SuffStats& stats, const MniwParams& prior,
                                   const MatrixXd& q);

/// Sum of per-segment log marginal likelihoods.
double log_marglik(const std::vector<SuffStats>& stats, const MniwParams& prior);

/// Joint posterior mode: A = M', Q = Lambda' / (n_x + count + dof + m + 1).
SegmentParams mstep(const SuffStats& stats, const MniwParams& prior);

/// M-step for A when Q is known.
MatrixXd mstep_coefficients(const SuffStats& stats, const MniwParams& prior);

}  // namespace bfssm
