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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bfssm/basis.hpp"
#include "bfssm/learning.hpp"
#include "bfssm/model.hpp"
#include "bfssm/systems.hpp"
#include "criteria.hpp"

namespace bfssm::acceptance {
namespace {

template <typename... Args>
std::string format(const char* fmt, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Empirical quantile by linear interpolation; `v` must be sorted.
double sorted_quantile(const std::vector<double>& v, double p) {
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

SsmConfig scalar_model(double r, double p0) {
  SsmConfig c;
  c.n_x = 1;
  c.n_u = 0;
  c.n_y = 1;
  c.observation.linear.state_gain = MatrixXd::Ones(1, 1);
  c.observation.linear.input_gain = MatrixXd::Zero(1, 0);
  c.observation.noise_cov = MatrixXd::Constant(1, 1, r);
  c.initial.mean = VectorXd::Zero(1);
  c.initial.cov = MatrixXd::Constant(1, 1, p0);
  return c;
}

// ---- toy sinc system ---------------------------------------------------------

struct ToyRun {
  double rmse_gp = 0.0;
  double rmse_flat = 0.0;
  double coverage = 0.0;
};

ToyRun toy_run(std::uint64_t seed) {
  constexpr int kFunctions = 40;
  constexpr int kGrid = 200;
  const double half_width = 20.0;
  RngStream source(seed);
  const auto generated = systems::generate_toy(40, source);
  const double lo = generated.states.minCoeff();
  const double hi = generated.states.maxCoeff();
  const ObservedData data = generated.data.observed();
  const SsmConfig config = scalar_model(systems::kToyMeasurementVar, systems::kToyInitialVar);
  const BasisSpec spec = BasisSpec::tensor({kFunctions});
  const Domain domain{{half_width}};
  const Basis basis(spec, domain);
  const MatrixXd q = MatrixXd::Constant(1, 1, systems::kToyProcessVar);

  std::vector<double> grid(kGrid), truth(kGrid);
  for (int i = 0; i < kGrid; ++i) {
    grid[i] = lo + (hi - lo) * i / (kGrid - 1);
    truth[i] = systems::toy_transition(grid[i]);
  }
  auto f_at = [&](const Theta& theta, double x) {
    return transition_mean(theta, Segmentation{}, basis, config, VectorXd::Constant(1, x), VectorXd())(0);
  };
  auto grid_rmse = [&](const Theta& theta) {
    double sq = 0.0;
    for (int i = 0; i < kGrid; ++i) sq += std::pow(f_at(theta, grid[i]) - truth[i], 2);
    return std::sqrt(sq / kGrid);
  };
  auto prior_with = [&](double s_f) {
    return MniwParams{MatrixXd::Zero(1, kFunctions),
                      build_prior_V(spec, domain, CovarianceFunction::squared_exponential(s_f, 3.0)),
                      MatrixXd::Ones(1, 1), 3.0};
  };

  ToyRun run;
  PsaemOptions po;
  po.iterations = 200;
  po.pgas.num_particles = 30;
  po.fixed_q = q;
  {
    RngStream rng(seed, 1);
    run.rmse_gp = grid_rmse(psaem(config, basis, data, prior_with(50.0), po, rng).theta);
  }
  {
    RngStream rng(seed, 1);
    run.rmse_flat = grid_rmse(psaem(config, basis, data, prior_with(1e6), po, rng).theta);
  }

  SegPrior seg_prior;
  seg_prior.mniw = prior_with(50.0);
  GibbsOptions go;
  go.iterations = 3000;
  go.pgas.num_particles = 30;
  go.fixed_q = q;
  go.keep_trajectories = false;
  RngStream rng(seed, 2);
  const GibbsChain chain = gibbs(config, basis, data, seg_prior, go, rng);
  constexpr std::size_t kBurnIn = 500;
  int covered = 0;
  std::vector<double> draws;
  for (int i = 0; i < kGrid; ++i) {
    draws.clear();
    for (std::size_t k = kBurnIn + 1; k < chain.samples.size(); ++k) {
      draws.push_back(f_at(chain.samples[k].state.theta, grid[i]));
    }
    std::sort(draws.begin(), draws.end());
    covered += truth[i] >= sorted_quantile(draws, 0.05) && truth[i] <= sorted_quantile(draws, 0.95);
  }
  run.coverage = static_cast<double>(covered) / kGrid;
  return run;
}

// ---- Narendra-Li ---------------------------------------------------------------

constexpr long long kTestHorizon = 1000;

double narendra_li_rmse(std::uint64_t seed, long long horizon, double noise_var, std::size_t iterations) {
  constexpr int kPerDim = 7;
  RngStream source(seed);
  const auto train = systems::generate_narendra_li(horizon, source, noise_var, false);
  const auto test = systems::generate_narendra_li(kTestHorizon, source, 0.0, true);

  SsmConfig config;
  config.n_x = 2;
  config.n_u = 1;
  config.n_y = 1;
  config.observation.linear.state_gain = (MatrixXd(1, 2) << 1.0, 1.0).finished();
  config.observation.linear.input_gain = MatrixXd::Zero(1, 1);
  config.observation.noise_cov = MatrixXd::Constant(1, 1, noise_var > 0.0 ? noise_var : 0.01);
  config.initial.mean = VectorXd::Zero(2);
  config.initial.cov = 0.1 * MatrixXd::Identity(2, 2);
  const BasisSpec spec = BasisSpec::tensor({kPerDim, kPerDim, kPerDim});
  const Domain domain{{7.0, 7.0, 3.5}};
  const Basis basis(spec, domain);
  SegPrior prior;
  prior.mniw = MniwParams{MatrixXd::Zero(2, static_cast<Eigen::Index>(spec.size())),
                          build_prior_V(spec, domain, CovarianceFunction::squared_exponential(10.0, 1.0)),
                          0.01 * MatrixXd::Identity(2, 2), 5.0};

  const ObservedData data = train.data.observed();
  const LinearInit linear = init_linear(data, config, prior.mniw);
  RngStream rng(seed, 1);
  GibbsState init = default_gibbs_init(config, basis, data, prior, std::nullopt, 0, 20, rng);
  if (!linear.fallback) {
    config.known_offset = linear.offset;
    init.theta = linear.theta;
    init.x = linear.states;
  }
  GibbsOptions go;
  go.iterations = iterations;
  go.pgas.num_particles = 20;
  go.keep_trajectories = false;
  GibbsSampler sampler(config, basis, data, prior, go, rng, std::move(init));

  // Posterior-mean simulated output over every tenth draw of the second half.
  Eigen::RowVectorXd mean_output = Eigen::RowVectorXd::Zero(kTestHorizon);
  int used = 0;
  for (std::size_t k = 1; k <= iterations; ++k) {
    sampler.step();
    if (k > iterations / 2 && k % 10 == 0) {
      const auto& s = sampler.state();
      mean_output += simulate_noise_free(ModelView(config, basis, s.theta, s.segmentation), test.data.u).y;
      ++used;
    }
  }
  mean_output /= used;
  return std::sqrt((mean_output - test.data.y).squaredNorm() / static_cast<double>(kTestHorizon));
}

}  // namespace

Outcome toy_example() {
  std::vector<double> coverage;
  bool regularization_helps = true;
  std::string detail;
  for (std::uint64_t seed : {1, 2, 3}) {
    const ToyRun run = toy_run(seed);
    regularization_helps = regularization_helps && run.rmse_gp < run.rmse_flat;
    coverage.push_back(run.coverage);
    detail += format("seed %d: grid RMSE %.3f (GP) vs %.3f (flat), band coverage %.3f; ", static_cast<int>(seed),
                     run.rmse_gp, run.rmse_flat, run.coverage);
  }
  const double med = median(coverage);
  detail += format("median coverage %.3f (need >= 0.90)", med);
  return {regularization_helps && med >= 0.90, detail};
}

Outcome narendra_li() {
  std::vector<double> clean, noisy;
  for (std::uint64_t seed : {1, 2, 3}) clean.push_back(narendra_li_rmse(seed, 500, 0.0, 3000));
  for (std::uint64_t seed : {1, 2, 3}) noisy.push_back(narendra_li_rmse(seed, 2000, 0.1, 3000));
  const double clean_median = median(clean), noisy_median = median(noisy);
  const std::string detail =
      format("noise-free T=500 RMSE %.3f %.3f %.3f, median %.3f (need <= 0.15); ", clean[0], clean[1], clean[2],
             clean_median) +
      format("noisy T=2000 RMSE %.3f %.3f %.3f, median %.3f (need <= 0.20)", noisy[0], noisy[1], noisy[2],
             noisy_median);
  return {clean_median <= 0.15 && noisy_median <= 0.20, detail};
}

Outcome discontinuity_learning() {
  constexpr int kHorizon = 300;
  constexpr std::size_t kIterations = 2000;
  const double process_var = 1.0, measurement_var = 0.1;
  bool all_pass = true;
  std::string detail;
  for (std::uint64_t seed : {1, 2, 3}) {
    RngStream source(seed);
    ObservedData data{MatrixXd(0, kHorizon), MatrixXd(1, kHorizon)};
    double x = source.normal();
    for (int t = 0; t < kHorizon; ++t) {
      data.y(0, t) = x + std::sqrt(measurement_var) * source.normal();
      x = (x < 0.0 ? 0.5 * x + 2.0 : 0.5 * x - 2.0) + std::sqrt(process_var) * source.normal();
    }
    const SsmConfig config = scalar_model(measurement_var, 1.0);
    const BasisSpec spec = BasisSpec::tensor({10});
    const Domain domain{{8.0}};
    const Basis basis(spec, domain);
    SegPrior prior;
    prior.mniw = MniwParams{MatrixXd::Zero(1, 10),
                            build_prior_V(spec, domain, CovarianceFunction::squared_exponential(5.0, 3.0)),
                            MatrixXd::Ones(1, 1), 3.0};
    prior.geometric_p = 0.5;
    prior.lower = -3.0;
    prior.upper = 3.0;
    GibbsOptions go;
    go.iterations = kIterations;
    go.pgas.num_particles = 20;
    go.learn_segmentation = true;
    go.proposal.sigma_rw = 0.3;
    go.keep_trajectories = false;
    RngStream rng(seed, 1);
    const GibbsChain chain = gibbs(config, basis, data, prior, go, rng);

    std::map<std::size_t, int> counts;
    std::vector<double> first_point;
    for (std::size_t k = kIterations / 4 + 1; k < chain.samples.size(); ++k) {
      const Segmentation& seg = chain.samples[k].state.segmentation;
      ++counts[seg.num_points()];
      if (!seg.points.empty()) first_point.push_back(seg.points.front());
    }
    const auto mode = std::max_element(counts.begin(), counts.end(), [](const auto& a, const auto& b) {
                        return a.second < b.second;
                      })->first;
    const double p1 = first_point.empty() ? NAN : median(first_point);
    const bool pass = mode == 1 && std::abs(p1) <= 0.5;
    all_pass = all_pass && pass;
    detail += format("seed %d: mode n_p %d, median p_1 %.3f, acceptance %.3f; ", static_cast<int>(seed),
                     static_cast<int>(mode), p1, chain.acceptance_rate());
  }
  detail += "need mode 1 and |p_1| <= 0.5 for every seed";
  return {all_pass, detail};
}

}  // namespace bfssm::acceptance
