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

#include "bfssm/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bfssm/errors.hpp"
#include "bfssm/linalg.hpp"

namespace bfssm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

VectorXd column(const MatrixXd& m, Eigen::Index t) {
  if (m.rows() == 0) return VectorXd(0);
  return m.col(t);
}

}  // namespace

VectorXd LinearMap::operator()(const VectorXd& x, const VectorXd& u) const {
  VectorXd out = state_gain * x;
  if (input_gain.size() > 0 && u.size() > 0) out += input_gain * u;
  return out;
}

VectorXd ObservationModel::operator()(const VectorXd& x, const VectorXd& u) const {
  if (custom) return custom(x, u);
  return linear(x, u);
}

void SsmConfig::validate() const {
  if (n_x < 1 || n_y < 1 || n_u < 0) throw ShapeError("model: invalid dimensions");
  if (!observation.custom) {
    if (observation.linear.state_gain.rows() != n_y ||
        observation.linear.state_gain.cols() != n_x) {
      throw ShapeError("model: observation state gain must be n_y x n_x");
    }
    const auto& d = observation.linear.input_gain;
    if (d.size() > 0 && (d.rows() != n_y || d.cols() != n_u)) {
      throw ShapeError("model: observation input gain must be n_y x n_u");
    }
  }
  if (observation.noise_cov.rows() != n_y) throw ShapeError("model: R must be n_y x n_y");
  cholesky(observation.noise_cov, "observation noise covariance R");
  if (initial.mean.size() != n_x || initial.cov.rows() != n_x || initial.cov.cols() != n_x) {
    throw ShapeError("model: initial state mean/covariance must have n_x entries");
  }
  covariance_factor(initial.cov, "initial state covariance");
  if (known_offset) {
    if (known_offset->state_gain.rows() != n_x || known_offset->state_gain.cols() != n_x) {
      throw ShapeError("model: offset state gain must be n_x x n_x");
    }
    const auto& g = known_offset->input_gain;
    if (g.size() > 0 && (g.rows() != n_x || g.cols() != n_u)) {
      throw ShapeError("model: offset input gain must be n_x x n_u");
    }
  }
}

VectorXd SsmConfig::offset(const VectorXd& x, const VectorXd& u) const {
  if (!known_offset) return VectorXd::Zero(x.size());
  return (*known_offset)(x, u);
}

std::size_t Segmentation::segment_of(double coordinate) const {
  return static_cast<std::size_t>(std::upper_bound(points.begin(), points.end(), coordinate) -
                                  points.begin());
}

void Segmentation::validate(int n_x) const {
  if (dim < 0 || dim >= n_x) throw ShapeError("segmentation: dimension out of range");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!std::isfinite(points[i])) throw ParameterError("segmentation: non-finite point");
    if (i > 0 && !(points[i] > points[i - 1])) {
      throw ParameterError("segmentation: points must be strictly increasing");
    }
  }
}

Theta Theta::zeros(std::size_t num_segments, int n_x, std::size_t m, const MatrixXd& q) {
  Theta theta;
  theta.segments.assign(num_segments,
                        SegmentParams{MatrixXd::Zero(n_x, static_cast<Eigen::Index>(m)), q});
  return theta;
}

void Theta::validate(int n_x, std::size_t m, std::size_t num_segments) const {
  if (segments.size() != num_segments) {
    throw ShapeError("theta: expected " + std::to_string(num_segments) + " segments, got " +
                     std::to_string(segments.size()));
  }
  for (const auto& s : segments) {
    if (s.A.rows() != n_x || s.A.cols() != static_cast<Eigen::Index>(m)) {
      throw ShapeError("theta: A must be n_x x m");
    }
    if (s.Q.rows() != n_x || s.Q.cols() != n_x) throw ShapeError("theta: Q must be n_x x n_x");
  }
}

SuffStats SuffStats::zeros(int n_x, std::size_t m) {
  const auto mm = static_cast<Eigen::Index>(m);
  return {MatrixXd::Zero(n_x, n_x), MatrixXd::Zero(n_x, mm), MatrixXd::Zero(mm, mm), 0.0};
}

SuffStats& SuffStats::operator+=(const SuffStats& other) {
  Phi += other.Phi;
  Psi += other.Psi;
  Sigma += other.Sigma;
  count += other.count;
  return *this;
}

SuffStats SuffStats::blend(const SuffStats& fresh, double gamma) const {
  return {(1.0 - gamma) * Phi + gamma * fresh.Phi, (1.0 - gamma) * Psi + gamma * fresh.Psi,
          (1.0 - gamma) * Sigma + gamma * fresh.Sigma, (1.0 - gamma) * count + gamma * fresh.count};
}

void SegPrior::validate() const {
  bfssm::validate(mniw);
  if (!(geometric_p > 0.0 && geometric_p <= 1.0)) {
    throw ParameterError("segmentation prior: geometric parameter must be in (0, 1]");
  }
  if (grid.empty() && !(upper > lower)) {
    throw ParameterError("segmentation prior: location interval is empty");
  }
}

std::vector<double> SegPrior::free_points(const Segmentation& seg) const {
  std::vector<double> out;
  for (double p : seg.points) {
    if (std::find(pinned.begin(), pinned.end(), p) == pinned.end()) out.push_back(p);
  }
  return out;
}

double SegPrior::log_prior(const Segmentation& seg) const {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  for (double p : pinned) {
    if (std::find(seg.points.begin(), seg.points.end(), p) == seg.points.end()) return kNegInf;
  }
  const auto free = free_points(seg);
  const double n = static_cast<double>(free.size());
  if (geometric_p == 1.0 && n > 0) return kNegInf;
  const double log_count =
      std::log(geometric_p) + (n > 0 ? n * std::log1p(-geometric_p) : 0.0);
  if (!grid.empty()) {
    const double g = static_cast<double>(grid.size());
    if (n > g) return kNegInf;
    for (double p : free) {
      if (std::find(grid.begin(), grid.end(), p) == grid.end()) return kNegInf;
    }
    // Uniform over n-subsets of the grid.
    return log_count - (std::lgamma(g + 1.0) - std::lgamma(n + 1.0) - std::lgamma(g - n + 1.0));
  }
  for (double p : free) {
    if (p < lower || p > upper) return kNegInf;
  }
  // Ordered statistics of n iid uniforms.
  return log_count + std::lgamma(n + 1.0) - n * std::log(upper - lower);
}

ModelView::ModelView(const SsmConfig& config, const Basis& basis, const Theta& theta,
                     const Segmentation& seg)
    : config_(&config), basis_(&basis), theta_(&theta), seg_(&seg) {}

VectorXd ModelView::transition_mean(const VectorXd& x, const VectorXd& u) const {
  const auto& params = theta_->segments[seg_->segment_of(x)];
  VectorXd out = params.A * (*basis_)(x, u);
  if (config_->known_offset) out += (*config_->known_offset)(x, u);
  return out;
}

VectorXd transition_mean(const Theta& theta, const Segmentation& seg, const Basis& basis,
                         const SsmConfig& config, const VectorXd& x, const VectorXd& u) {
  return ModelView(config, basis, theta, seg).transition_mean(x, u);
}

Simulation simulate(const ModelView& model, const MatrixXd& inputs, RngStream& rng) {
  const auto& cfg = model.config();
  const Eigen::Index horizon = inputs.cols();
  std::vector<MatrixXd> q_factors;
  for (const auto& s : model.theta().segments) {
    q_factors.push_back(covariance_factor(s.Q, "process noise covariance Q"));
  }
  const MatrixXd r_factor = covariance_factor(cfg.observation.noise_cov, "observation noise R");
  Simulation sim{MatrixXd(cfg.n_x, horizon), MatrixXd(cfg.n_y, horizon)};
  if (horizon == 0) return sim;
  sim.x.col(0) = sample_mvn(rng, cfg.initial.mean, cfg.initial.cov);
  VectorXd noise_x(cfg.n_x);
  VectorXd noise_y(cfg.n_y);
  for (Eigen::Index t = 0; t < horizon; ++t) {
    const VectorXd x = sim.x.col(t);
    const VectorXd u = column(inputs, t);
    for (Eigen::Index i = 0; i < noise_y.size(); ++i) noise_y[i] = rng.normal();
    sim.y.col(t) = cfg.observation(x, u) + r_factor * noise_y;
    if (t + 1 < horizon) {
      for (Eigen::Index i = 0; i < noise_x.size(); ++i) noise_x[i] = rng.normal();
      sim.x.col(t + 1) =
          model.transition_mean(x, u) + q_factors[model.segment_of(x)] * noise_x;
    }
  }
  return sim;
}

Simulation simulate_noise_free(const ModelView& model, const MatrixXd& inputs) {
  const auto& cfg = model.config();
  const Eigen::Index horizon = inputs.cols();
  Simulation sim{MatrixXd(cfg.n_x, horizon), MatrixXd(cfg.n_y, horizon)};
  if (horizon == 0) return sim;
  sim.x.col(0) = cfg.initial.mean;
  for (Eigen::Index t = 0; t < horizon; ++t) {
    const VectorXd x = sim.x.col(t);
    const VectorXd u = column(inputs, t);
    sim.y.col(t) = cfg.observation(x, u);
    if (t + 1 < horizon) sim.x.col(t + 1) = model.transition_mean(x, u);
  }
  return sim;
}

TransitionData make_transition_data(const MatrixXd& x, const MatrixXd& u, const Basis& basis,
                                    const SsmConfig& config) {
  const Eigen::Index horizon = x.cols();
  const Eigen::Index n = std::max<Eigen::Index>(horizon - 1, 0);
  if (u.rows() > 0 && u.cols() < horizon) throw ShapeError("statistics: fewer inputs than states");
  TransitionData data{MatrixXd(static_cast<Eigen::Index>(basis.size()), n),
                      MatrixXd(x.rows(), n), MatrixXd(x.rows(), n)};
  for (Eigen::Index t = 0; t < n; ++t) {
    const VectorXd xt = x.col(t);
    const VectorXd ut = column(u, t);
    basis.evaluate(xt, ut, data.regressors.col(t));
    data.targets.col(t) = x.col(t + 1);
    if (config.known_offset) data.targets.col(t) -= (*config.known_offset)(xt, ut);
    data.states.col(t) = xt;
  }
  return data;
}

std::vector<SuffStats> stats_for(const TransitionData& data, const Segmentation& seg) {
  const auto n_x = static_cast<int>(data.targets.rows());
  const auto m = static_cast<std::size_t>(data.regressors.rows());
  std::vector<SuffStats> out(seg.num_segments(), SuffStats::zeros(n_x, m));
  const Eigen::Index n = data.regressors.cols();
  auto accumulate = [](SuffStats& s, const MatrixXd& z, const MatrixXd& r) {
    s.Phi.noalias() += z * z.transpose();
    s.Psi.noalias() += z * r.transpose();
    s.Sigma.selfadjointView<Eigen::Lower>().rankUpdate(r);
    s.Sigma.triangularView<Eigen::StrictlyUpper>() = s.Sigma.transpose();
    s.count += static_cast<double>(r.cols());
  };
  if (seg.points.empty()) {
    if (n > 0) accumulate(out[0], data.targets, data.regressors);
    return out;
  }
  std::vector<std::vector<Eigen::Index>> members(seg.num_segments());
  for (Eigen::Index t = 0; t < n; ++t) {
    members[seg.segment_of(data.states(seg.dim, t))].push_back(t);
  }
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (members[i].empty()) continue;
    accumulate(out[i], data.targets(Eigen::all, members[i]),
               data.regressors(Eigen::all, members[i]));
  }
  return out;
}

std::vector<SuffStats> compute_stats(const MatrixXd& x, const MatrixXd& u, const Basis& basis,
                                     const SsmConfig& config, const Segmentation& seg) {
  return stats_for(make_transition_data(x, u, basis, config), seg);
}

MniwParams posterior_mniw(const SuffStats& stats, const MniwParams& prior) {
  validate(prior);
  if (stats.empty() && stats.Phi.isZero(0.0) && stats.Psi.isZero(0.0) &&
      stats.Sigma.isZero(0.0)) {
    return prior;
  }
  const auto v_llt = cholesky(prior.col_cov, "prior column covariance V");
  const MatrixXd v_inv = spd_inverse(v_llt);
  const MatrixXd precision = symmetrize(stats.Sigma + v_inv);
  const auto p_llt = cholesky_with_jitter(precision, "posterior precision Sigma + V^-1");
  const MatrixXd b = stats.Psi + prior.mean * v_inv;
  MniwParams post;
  post.mean = p_llt.solve(b.transpose()).transpose();
  post.col_cov = spd_inverse(p_llt);
  post.scale = symmetrize(prior.scale + stats.Phi + prior.mean * v_inv * prior.mean.transpose() -
                          b * post.mean.transpose());
  post.dof = prior.dof + stats.count;
  cholesky_with_jitter(post.scale, "posterior scale Lambda'");
  return post;
}

double transition_loglik(const MatrixXd& a, const MatrixXd& q, const SuffStats& stats) {
  const auto q_llt = cholesky(q, "process noise covariance Q");
  const MatrixXd s = stats.Phi - a * stats.Psi.transpose() - stats.Psi * a.transpose() +
                     a * stats.Sigma * a.transpose();
  const double n = static_cast<double>(q.rows());
  return -0.5 * stats.count * (n * kLog2Pi + log_det(q_llt)) - 0.5 * q_llt.solve(s).trace();
}

double log_joint(const MatrixXd& a, const MatrixXd& q, const SuffStats& stats,
                 const MniwParams& prior) {
  const auto q_llt = cholesky(q, "process noise covariance Q");
  const MniwParams post = posterior_mniw(stats, prior);
  const MatrixXd precision =
      symmetrize(stats.Sigma + spd_inverse(cholesky(prior.col_cov, "prior column covariance V")));
  const auto p_llt = cholesky_with_jitter(precision, "posterior precision Sigma + V^-1");
  const MatrixXd d = a - post.mean;
  const MatrixXd dl = d * MatrixXd(p_llt.matrixL());
  const double n = static_cast<double>(q.rows());
  const double m = static_cast<double>(a.cols());
  return -0.5 * (n + stats.count + prior.dof + m + 1.0) * log_det(q_llt) -
         0.5 * q_llt.solve(post.scale + dl * dl.transpose()).trace();
}

double log_marglik_segment(const SuffStats& stats, const MniwParams& prior, const MatrixXd& a_eval,
                           const MatrixXd& q_eval) {
  const MniwParams post = posterior_mniw(stats, prior);
  return mniw_logpdf(a_eval, q_eval, prior) + transition_loglik(a_eval, q_eval, stats) -
         mniw_logpdf(a_eval, q_eval, post);
}

double log_marglik_segment(const SuffStats& stats, const MniwParams& prior) {
  const MniwParams post = posterior_mniw(stats, prior);
  const double n = static_cast<double>(post.scale.rows());
  const MatrixXd q_mode = post.scale / (post.dof + n + 1.0);
  return mniw_logpdf(post.mean, q_mode, prior) + transition_loglik(post.mean, q_mode, stats) -
         mniw_logpdf(post.mean, q_mode, post);
}

double log_marglik_segment_given_q(const SuffStats& stats, const MniwParams& prior,
                                   const MatrixXd& q) {
  const MniwParams post = posterior_mniw(stats, prior);
  return mn_logpdf(post.mean, MatrixNormalParams{prior.mean, q, prior.col_cov}) +
         transition_loglik(post.mean, q, stats) -
         mn_logpdf(post.mean, MatrixNormalParams{post.mean, q, post.col_cov});
}

double log_marglik(const std::vector<SuffStats>& stats, const MniwParams& prior) {
  double total = 0.0;
  for (const auto& s : stats) total += log_marglik_segment(s, prior);
  return total;
}

SegmentParams mstep(const SuffStats& stats, const MniwParams& prior) {
  const MniwParams post = posterior_mniw(stats, prior);
  const double n = static_cast<double>(prior.scale.rows());
  const double m = static_cast<double>(prior.col_cov.rows());
  MatrixXd q = symmetrize(post.scale / (n + stats.count + prior.dof + m + 1.0));
  cholesky_with_jitter(q, "M-step Q");
  return {post.mean, std::move(q)};
}

MatrixXd mstep_coefficients(const SuffStats& stats, const MniwParams& prior) {
  return posterior_mniw(stats, prior).mean;
}

}  // namespace bfssm
