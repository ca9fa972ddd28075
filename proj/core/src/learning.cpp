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

#include "bfssm/learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include "bfssm/distributions.hpp"
#include "bfssm/errors.hpp"
#include "bfssm/linalg.hpp"

namespace bfssm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t uniform_index(RngStream& rng, std::size_t n) {
  return std::min(static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)), n - 1);
}

bool contains(const std::vector<double>& v, double p) {
  return std::find(v.begin(), v.end(), p) != v.end();
}

void replace_point(Segmentation& seg, double old_p, double new_p) {
  *std::find(seg.points.begin(), seg.points.end(), old_p) = new_p;
  std::sort(seg.points.begin(), seg.points.end());
}

bool occupancy_ok(const TransitionData& transitions, const Segmentation& seg,
                  std::size_t min_count) {
  if (min_count == 0) return true;
  std::vector<std::size_t> counts(seg.num_segments(), 0);
  for (Eigen::Index t = 0; t < transitions.states.cols(); ++t) {
    ++counts[seg.segment_of(transitions.states(seg.dim, t))];
  }
  return std::all_of(counts.begin(), counts.end(),
                     [&](std::size_t c) { return c >= min_count; });
}

}  // namespace

void XiProposal::validate() const {
  if (relocate < 0.0 || birth < 0.0 || death < 0.0) {
    throw ParameterError("xi proposal: negative move probability");
  }
  if (std::abs(relocate + birth + death - 1.0) > 1e-12) {
    throw ParameterError("xi proposal: move probabilities must sum to 1");
  }
  if ((birth > 0.0) != (death > 0.0)) {
    throw ParameterError("xi proposal: birth and death must both be enabled or both disabled");
  }
  if (!(sigma_rw > 0.0)) throw ParameterError("xi proposal: sigma_rw must be positive");
}

double log_xi_target(const TransitionData& transitions, const Segmentation& seg,
                     const SegPrior& prior, const MatrixXd* fixed_q) {
  const double lp = prior.log_prior(seg);
  if (lp == kNegInf) return kNegInf;
  const auto stats = stats_for(transitions, seg);
  double lml = 0.0;
  for (const auto& s : stats) {
    lml += fixed_q ? log_marglik_segment_given_q(s, prior.mniw, *fixed_q)
                   : log_marglik_segment(s, prior.mniw);
  }
  return lml + lp;
}

XiStep sample_xi_mh(const TransitionData& transitions, const Segmentation& current,
                    const SegPrior& prior, const XiProposal& proposal, RngStream& rng,
                    const MatrixXd* fixed_q) {
  XiStep out{current, XiMove::None, false, 0.0};
  const auto free = prior.free_points(current);
  const std::size_t n = free.size();
  const bool on_grid = !prior.grid.empty();
  const double log_location = on_grid ? -std::log(static_cast<double>(prior.grid.size()))
                                      : -std::log(prior.upper - prior.lower);

  Segmentation cand = current;
  double log_q_ratio = 0.0;  // log q(current | cand) - log q(cand | current)
  const double pick = rng.uniform();
  if (pick < proposal.relocate) {
    out.move = XiMove::Relocate;
    if (n == 0) return out;
    const double old_p = free[uniform_index(rng, n)];
    double new_p = 0.0;
    if (on_grid) {
      const auto it = std::find(prior.grid.begin(), prior.grid.end(), old_p);
      const auto g = static_cast<std::ptrdiff_t>(it - prior.grid.begin());
      const std::ptrdiff_t target = rng.uniform() < 0.5 ? g - 1 : g + 1;
      if (it == prior.grid.end() || target < 0 ||
          target >= static_cast<std::ptrdiff_t>(prior.grid.size())) {
        return out;
      }
      new_p = prior.grid[static_cast<std::size_t>(target)];
    } else {
      new_p = old_p + proposal.sigma_rw * rng.normal();
    }
    if (contains(current.points, new_p)) return out;
    replace_point(cand, old_p, new_p);
  } else if (pick < proposal.relocate + proposal.birth) {
    out.move = XiMove::Birth;
    const double new_p = on_grid ? prior.grid[uniform_index(rng, prior.grid.size())]
                                 : prior.lower + rng.uniform() * (prior.upper - prior.lower);
    if (contains(current.points, new_p)) return out;
    cand.points.push_back(new_p);
    std::sort(cand.points.begin(), cand.points.end());
    log_q_ratio = std::log(proposal.death) - std::log(static_cast<double>(n + 1)) -
                  (std::log(proposal.birth) + log_location);
  } else {
    out.move = XiMove::Death;
    if (n == 0) return out;
    const double old_p = free[uniform_index(rng, n)];
    cand.points.erase(std::find(cand.points.begin(), cand.points.end(), old_p));
    log_q_ratio = std::log(proposal.birth) + log_location -
                  (std::log(proposal.death) - std::log(static_cast<double>(n)));
  }

  if (prior.log_prior(cand) == kNegInf) return out;
  if (!occupancy_ok(transitions, cand, proposal.min_segment_transitions)) return out;

  const double log_alpha = log_xi_target(transitions, cand, prior, fixed_q) -
                           log_xi_target(transitions, current, prior, fixed_q) + log_q_ratio;
  out.acceptance_probability = std::isnan(log_alpha) ? 0.0 : std::min(1.0, std::exp(log_alpha));
  if (std::log(rng.uniform()) < log_alpha) {
    out.accepted = true;
    out.segmentation = std::move(cand);
  }
  return out;
}

XiStep sample_xi_mh(const MatrixXd& x, const MatrixXd& u, const Segmentation& current,
                    const SegPrior& prior, const XiProposal& proposal, const Basis& basis,
                    const SsmConfig& config, RngStream& rng) {
  return sample_xi_mh(make_transition_data(x, u, basis, config), current, prior, proposal, rng);
}

// --- Particle Gibbs ---------------------------------------------------------

const std::array<SweepStep, 4>& GibbsSampler::schedule() {
  // The segmentation is drawn with (A, Q) collapsed; its MH update reads the
  // freshly drawn trajectory and its own previous value only.
  static const std::array<SweepStep, 4> steps{{
      {Block::Trajectory, {Block::Coefficients, Block::NoiseCovariance, Block::Segmentation}},
      {Block::Segmentation, {Block::Trajectory}, true},
      {Block::NoiseCovariance, {Block::Segmentation, Block::Trajectory}},
      {Block::Coefficients, {Block::NoiseCovariance, Block::Segmentation, Block::Trajectory}},
  }};
  return steps;
}

GibbsSampler::GibbsSampler(const SsmConfig& config, const Basis& basis, const ObservedData& data,
                           SegPrior prior, GibbsOptions options, RngStream rng, GibbsState init)
    : config_(&config),
      basis_(&basis),
      data_(&data),
      prior_(std::move(prior)),
      options_(std::move(options)),
      rng_(std::move(rng)),
      state_(std::move(init)) {
  config_->validate();
  prior_.validate();
  if (options_.learn_segmentation) options_.proposal.validate();
  state_.segmentation.validate(config_->n_x);
  state_.theta.validate(config_->n_x, basis_->size(), state_.segmentation.num_segments());
}

void GibbsSampler::step() {
  for (const auto& s : schedule()) run(s);
  ++k_;
}

void GibbsSampler::run(const SweepStep& s) {
  switch (s.target) {
    case Block::Trajectory: {
      const ModelView model(*config_, *basis_, state_.theta, state_.segmentation);
      state_.x = pgas_kernel(state_.x, model, *data_, options_.pgas, rng_);
      transitions_ = make_transition_data(state_.x, data_->u, *basis_, *config_);
      break;
    }
    case Block::Segmentation: {
      last_accepted_ = false;
      if (!options_.learn_segmentation) break;
      const MatrixXd* fixed_q = options_.fixed_q ? &*options_.fixed_q : nullptr;
      const XiStep r = sample_xi_mh(*transitions_, state_.segmentation, prior_, options_.proposal,
                                    rng_, fixed_q);
      ++proposals_;
      if (r.accepted) {
        ++accepts_;
        last_accepted_ = true;
        state_.segmentation = r.segmentation;
      }
      break;
    }
    case Block::NoiseCovariance: {
      stats_ = stats_for(*transitions_, state_.segmentation);
      const auto n_seg = state_.segmentation.num_segments();
      state_.theta.segments.resize(n_seg);
      for (std::size_t i = 0; i < n_seg; ++i) {
        if (options_.fixed_q) {
          state_.theta.segments[i].Q = *options_.fixed_q;
        } else {
          const MniwParams post = posterior_mniw(stats_[i], prior_.mniw);
          state_.theta.segments[i].Q = sample_iw(rng_, InverseWishartParams{post.dof, post.scale});
        }
      }
      break;
    }
    case Block::Coefficients: {
      for (std::size_t i = 0; i < stats_.size(); ++i) {
        const MniwParams post = posterior_mniw(stats_[i], prior_.mniw);
        auto& seg = state_.theta.segments[i];
        seg.A = sample_mn(rng_, MatrixNormalParams{post.mean, seg.Q, post.col_cov});
      }
      break;
    }
  }
}

GibbsState default_gibbs_init(const SsmConfig& config, const Basis& basis,
                              const ObservedData& data, const SegPrior& prior,
                              const std::optional<MatrixXd>& fixed_q, int segmentation_dim,
                              std::size_t num_particles, RngStream& rng) {
  GibbsState init;
  init.segmentation.dim = segmentation_dim;
  init.segmentation.points = prior.pinned;
  std::sort(init.segmentation.points.begin(), init.segmentation.points.end());
  const double n = static_cast<double>(config.n_x);
  const MatrixXd q = fixed_q ? *fixed_q : MatrixXd(prior.mniw.scale / (prior.mniw.dof + n + 1.0));
  init.theta = Theta::zeros(init.segmentation.num_segments(), config.n_x, basis.size(), q);
  const ModelView model(config, basis, init.theta, init.segmentation);
  init.x = bootstrap_trajectory(model, data, num_particles, rng);
  return init;
}

GibbsChain gibbs(const SsmConfig& config, const Basis& basis, const ObservedData& data,
                 const SegPrior& prior, const GibbsOptions& options, RngStream& rng,
                 std::optional<GibbsState> init, int segmentation_dim,
                 const GibbsCallback& on_sample) {
  if (options.iterations < 1) throw ParameterError("gibbs: need at least one iteration");
  if (!init) {
    init = default_gibbs_init(config, basis, data, prior, options.fixed_q, segmentation_dim,
                              options.pgas.num_particles, rng);
  }
  GibbsChain chain;
  auto record = [&](GibbsSample sample) {
    if (on_sample) on_sample(sample);
    if (!options.keep_trajectories) sample.state.x.resize(0, 0);
    chain.samples.push_back(std::move(sample));
  };
  record(GibbsSample{0, *init, false});
  GibbsSampler sampler(config, basis, data, prior, options, rng, std::move(*init));
  for (std::size_t k = 1; k <= options.iterations; ++k) {
    sampler.step();
    record(GibbsSample{k, sampler.state(), sampler.last_xi_accepted()});
  }
  rng = sampler.rng();
  chain.xi_proposals = sampler.xi_proposals();
  chain.xi_accepts = sampler.xi_accepts();
  return chain;
}

// --- PSAEM --------------------------------------------------------------------

double PsaemOptions::step_size(std::size_t k) const {
  if (k <= burn_in) return 1.0;
  return std::pow(static_cast<double>(k - burn_in), -gamma_exponent);
}

PsaemResult psaem(const SsmConfig& config, const Basis& basis, const ObservedData& data,
                  const MniwParams& prior, const PsaemOptions& options, RngStream& rng,
                  std::optional<Theta> init, std::optional<MatrixXd> init_x,
                  const PsaemCallback& on_iteration) {
  config.validate();
  validate(prior);
  if (options.iterations < 1) throw ParameterError("psaem: need at least one iteration");
  const Segmentation seg{};
  PsaemResult result;
  if (init) {
    result.theta = std::move(*init);
  } else {
    const double n = static_cast<double>(config.n_x);
    const MatrixXd q = options.fixed_q ? *options.fixed_q
                                       : MatrixXd(prior.scale / (prior.dof + n + 1.0));
    result.theta = Theta::zeros(1, config.n_x, basis.size(), q);
  }
  result.theta.validate(config.n_x, basis.size(), 1);
  if (init_x) {
    result.x = std::move(*init_x);
  } else {
    const ModelView model(config, basis, result.theta, seg);
    result.x = bootstrap_trajectory(model, data, options.pgas.num_particles, rng);
  }
  result.smoothed = SuffStats::zeros(config.n_x, basis.size());
  result.trace.reserve(options.iterations);

  for (std::size_t k = 1; k <= options.iterations; ++k) {
    const ModelView model(config, basis, result.theta, seg);
    result.x = pgas_kernel(result.x, model, data, options.pgas, rng);
    const SuffStats fresh =
        stats_for(make_transition_data(result.x, data.u, basis, config), seg).front();
    const double gamma = options.step_size(k);
    result.smoothed = result.smoothed.blend(fresh, gamma);
    auto& params = result.theta.segments.front();
    if (options.fixed_q) {
      params.A = mstep_coefficients(result.smoothed, prior);
      params.Q = *options.fixed_q;
    } else {
      params = mstep(result.smoothed, prior);
    }
    result.trace.push_back(PsaemTraceEntry{k, gamma, result.theta});
    if (on_iteration) on_iteration(result.trace.back());
  }
  return result;
}

// --- Initialization ---------------------------------------------------------

LinearInit init_linear(const ObservedData& data, const SsmConfig& config, const MniwParams& prior) {
  const int n_x = config.n_x;
  const int n_u = config.n_u;
  const int n_y = config.n_y;
  const auto m = static_cast<std::size_t>(prior.col_cov.rows());
  const MatrixXd q_default = prior.scale / (prior.dof + n_x + 1.0);

  LinearInit out;
  out.theta = Theta::zeros(1, n_x, m, q_default);
  out.offset = LinearMap{MatrixXd::Zero(n_x, n_x), MatrixXd::Zero(n_x, n_u)};
  auto fallback = [&](std::string why) {
    out.fallback = true;
    out.warning = "linear initialization fell back to a zero model: " + std::move(why);
    out.states = MatrixXd();
    return out;
  };

  const Eigen::Index horizon = data.horizon();
  if (config.observation.custom) return fallback("observation map is not linear");
  if (n_x % n_y != 0) return fallback("state dimension is not a multiple of the output dimension");
  const MatrixXd& c = config.observation.linear.state_gain;
  if (Eigen::CompleteOrthogonalDecomposition<MatrixXd>(c).rank() < n_y) {
    return fallback("observation gain does not have full row rank");
  }
  const int order = n_x / n_y;
  if (horizon < order + 1) return fallback("too few samples");

  MatrixXd y = data.y;
  if (config.observation.linear.input_gain.size() > 0 && n_u > 0) {
    y -= config.observation.linear.input_gain * data.u;
  }

  // ARX fit: y_{t+1} = sum_i a_i y_{t+1-i} + b_i u_{t+1-i}, i = 1..order.
  const Eigen::Index n = horizon - order;
  const Eigen::Index p = order * (n_y + n_u);
  MatrixXd regressors(p, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index t = j + order - 1;
    for (int i = 0; i < order; ++i) {
      regressors.block(i * n_y, j, n_y, 1) = y.col(t - i);
      if (n_u > 0) regressors.block(order * n_y + i * n_u, j, n_u, 1) = data.u.col(t - i);
    }
  }
  const MatrixXd targets = y.rightCols(n);

  const MatrixXd gram = regressors * regressors.transpose();
  const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(gram);
  const double top = eig.eigenvalues().maxCoeff();
  if (!(top > 0.0) || eig.eigenvalues().minCoeff() < 1e-10 * top) {
    return fallback("regressors are rank deficient");
  }

  SuffStats stats{targets * targets.transpose(), targets * regressors.transpose(), gram,
                  static_cast<double>(n)};
  const double tiny = 1e-9 * q_default.trace() / n_x;
  const MniwParams flat{MatrixXd::Zero(n_y, p), 1e8 * MatrixXd::Identity(p, p),
                        tiny * MatrixXd::Identity(n_y, n_y), static_cast<double>(n_y)};
  MniwParams post;
  try {
    post = posterior_mniw(stats, flat);
  } catch (const NumericalError& e) {
    return fallback(e.what());
  }

  // Observable canonical realization with output [I 0 ... 0].
  MatrixXd f_obs = MatrixXd::Zero(n_x, n_x);
  MatrixXd g_obs = MatrixXd::Zero(n_x, n_u);
  for (int i = 0; i < order; ++i) {
    f_obs.block(i * n_y, 0, n_y, n_y) = post.mean.block(0, i * n_y, n_y, n_y);
    if (i + 1 < order) f_obs.block(i * n_y, (i + 1) * n_y, n_y, n_y).setIdentity();
    if (n_u > 0) g_obs.block(i * n_y, 0, n_y, n_u) = post.mean.block(0, order * n_y + i * n_u, n_y, n_u);
  }
  MatrixXd canonical = MatrixXd::Zero(n_x, horizon);
  for (Eigen::Index t = 0; t < horizon; ++t) {
    canonical.block(0, t, n_y, 1) = y.col(t);
    for (int blk = 1; blk < order; ++blk) {
      VectorXd acc = VectorXd::Zero(n_y);
      for (int i = blk; i < order; ++i) {
        const Eigen::Index lag = t + blk - 1 - i;
        if (lag < 0) continue;
        acc += f_obs.block(i * n_y, 0, n_y, n_y) * y.col(lag);
        if (n_u > 0) acc += g_obs.block(i * n_y, 0, n_y, n_u) * data.u.col(lag);
      }
      canonical.block(blk * n_y, t, n_y, 1) = acc;
    }
  }

  // Change of coordinates z = T xi with C T = [I 0 ... 0].
  MatrixXd transform(n_x, n_x);
  transform.leftCols(n_y) = Eigen::CompleteOrthogonalDecomposition<MatrixXd>(c).pseudoInverse();
  if (n_x > n_y) {
    const Eigen::FullPivLU<MatrixXd> lu(c);
    transform.rightCols(n_x - n_y) = lu.kernel().householderQr().householderQ() *
                                     MatrixXd::Identity(n_x, n_x - n_y);
  }
  const MatrixXd inverse = transform.inverse();
  out.offset.state_gain = transform * f_obs * inverse;
  out.offset.input_gain = transform * g_obs;
  out.states = transform * canonical;

  const double resid = (post.scale / static_cast<double>(n)).trace() / n_y;
  if (resid > 0.0 && n > p) {
    out.theta.segments.front().Q = resid * MatrixXd::Identity(n_x, n_x);
  }
  return out;
}

}  // namespace bfssm
