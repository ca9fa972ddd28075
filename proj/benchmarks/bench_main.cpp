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

#include <benchmark/benchmark.h>

#include "bfssm/basis.hpp"
#include "bfssm/model.hpp"
#include "bfssm/smc.hpp"
#include "bfssm/systems.hpp"

namespace bfssm {
namespace {

// Narendra-Li-sized model: n_x = 2, n_u = 1, `per_dim` functions per input.
struct Setup {
  explicit Setup(int per_dim)
      : spec(BasisSpec::tensor({per_dim, per_dim, per_dim})),
        domain{{7.0, 7.0, 3.5}},
        basis(spec, domain) {
    config.n_x = 2;
    config.n_u = 1;
    config.n_y = 1;
    config.observation.linear.state_gain = (MatrixXd(1, 2) << 1.0, 1.0).finished();
    config.observation.linear.input_gain = MatrixXd::Zero(1, 1);
    config.observation.noise_cov = MatrixXd::Constant(1, 1, 0.1);
    config.initial.mean = VectorXd::Zero(2);
    config.initial.cov = MatrixXd::Identity(2, 2);
    RngStream rng(7);
    theta = Theta::zeros(1, 2, spec.size(), 0.05 * MatrixXd::Identity(2, 2));
    for (auto& a : theta.segments[0].A.reshaped()) a = 0.1 * rng.normal();
  }

  BasisSpec spec;
  Domain domain;
  Basis basis;
  SsmConfig config;
  Theta theta;
  Segmentation seg;
};

void BM_RegressionVector(benchmark::State& state) {
  const Setup s(static_cast<int>(state.range(0)));
  const VectorXd x = (VectorXd(2) << 0.3, -1.2).finished();
  const VectorXd u = VectorXd::Constant(1, 0.7);
  VectorXd out(static_cast<Eigen::Index>(s.basis.size()));
  for (auto _ : state) {
    s.basis.evaluate(x, u, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["m"] = static_cast<double>(s.basis.size());
}
BENCHMARK(BM_RegressionVector)->Arg(3)->Arg(5)->Arg(7)->Arg(9);

void BM_ComputeStats(benchmark::State& state) {
  const Setup s(7);
  const auto horizon = state.range(0);
  RngStream rng(11);
  const auto g = systems::generate_narendra_li(horizon, rng, 0.0, false);
  for (auto _ : state) {
    auto stats = compute_stats(g.states, g.data.u, s.basis, s.config, s.seg);
    benchmark::DoNotOptimize(stats.data());
  }
  state.SetItemsProcessed(state.iterations() * horizon);
}
BENCHMARK(BM_ComputeStats)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_PgasSweep(benchmark::State& state) {
  const Setup s(7);
  const auto particles = static_cast<std::size_t>(state.range(0));
  const auto horizon = state.range(1);
  RngStream rng(13);
  const auto g = systems::generate_narendra_li(horizon, rng, 0.1, false);
  const ObservedData data = g.data.observed();
  const ModelView view(s.config, s.basis, s.theta, s.seg);
  PgasConfig pg;
  pg.num_particles = particles;
  MatrixXd reference = MatrixXd::Zero(2, horizon);
  for (auto _ : state) {
    reference = pgas_kernel(reference, view, data, pg, rng);
    benchmark::DoNotOptimize(reference.data());
  }
  state.SetItemsProcessed(state.iterations() * horizon * static_cast<long long>(particles));
}
BENCHMARK(BM_PgasSweep)->Args({10, 500})->Args({20, 500})->Args({40, 500})->Args({20, 2000})
    ->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace bfssm

BENCHMARK_MAIN();
