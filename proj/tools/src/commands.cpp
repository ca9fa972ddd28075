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

#include "bfssm/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/sinks/basic_file_sink.h>
#include <spdlog/sinks/stdout_color_sinks.h>

#include "bfssm/cli/config.hpp"
#include "bfssm/cli/model_file.hpp"
#include "bfssm/io.hpp"
#include "bfssm/learning.hpp"
#include "bfssm/systems.hpp"

namespace bfssm::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t seed_or_entropy(const std::optional<std::uint64_t>& seed, spdlog::logger& log) {
  if (seed) {
    log.info("seed {}", *seed);
    return *seed;
  }
  const std::uint64_t drawn = entropy_seed();
  log.info("seed {} (drawn from OS entropy)", drawn);
  return drawn;
}

// Linear-interpolated sample quantile; sorts `values` in place.
double quantile(std::vector<double>& values, double p) {
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

struct Band {
  double median, low, high;
};

Band band(std::vector<double>& values) {
  return {quantile(values, 0.5), quantile(values, 0.05), quantile(values, 0.95)};
}

void check_dimensions(const Dataset& data, const SsmConfig& config, const std::string& path) {
  if (data.u.rows() != config.n_u || data.y.rows() != config.n_y) {
    throw DataError(path + ": expected " + std::to_string(config.n_u) + " input and " +
                    std::to_string(config.n_y) + " output columns, found " +
                    std::to_string(data.u.rows()) + " and " + std::to_string(data.y.rows()));
  }
}

std::ofstream open_for_writing(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

ParameterSample as_sample(std::size_t k, std::size_t chain, const GibbsState& state, bool accepted) {
  ParameterSample s;
  s.k = k;
  s.chain = chain;
  s.theta = state.theta;
  s.segmentation = state.segmentation;
  s.accepted = accepted;
  return s;
}

// Element-wise mean over draws sharing the most frequent segment count.
std::pair<Theta, Segmentation> posterior_summary(const std::vector<ParameterSample>& draws, int dim) {
  std::map<std::size_t, std::size_t> counts;
  for (const auto& d : draws) ++counts[d.segmentation.num_points()];
  const std::size_t modal = std::max_element(counts.begin(), counts.end(), [](auto& a, auto& b) {
                              return a.second < b.second;
                            })->first;
  Theta mean;
  std::vector<std::vector<double>> points(modal);
  std::size_t used = 0;
  for (const auto& d : draws) {
    if (d.segmentation.num_points() != modal) continue;
    if (used++ == 0) {
      mean = d.theta;
    } else {
      for (std::size_t i = 0; i < mean.segments.size(); ++i) {
        mean.segments[i].A += d.theta.segments[i].A;
        mean.segments[i].Q += d.theta.segments[i].Q;
      }
    }
    for (std::size_t i = 0; i < modal; ++i) points[i].push_back(d.segmentation.points[i]);
  }
  for (auto& s : mean.segments) {
    s.A /= static_cast<double>(used);
    s.Q /= static_cast<double>(used);
  }
  Segmentation seg{dim, {}};
  for (auto& p : points) seg.points.push_back(quantile(p, 0.5));
  std::sort(seg.points.begin(), seg.points.end());
  return {mean, seg};
}

std::shared_ptr<spdlog::logger> run_logger(const fs::path& log_path, bool quiet) {
  auto file = std::make_shared<spdlog::sinks::basic_file_sink_mt>(log_path.string(), true);
  std::vector<spdlog::sink_ptr> sinks{file};
  if (!quiet) sinks.push_back(std::make_shared<spdlog::sinks::stderr_color_sink_mt>());
  auto log = std::make_shared<spdlog::logger>("learn", sinks.begin(), sinks.end());
  log->set_pattern("[%Y-%m-%d %H:%M:%S.%e] [%l] %v");
  log->flush_on(spdlog::level::info);
  return log;
}

Theta replicate_segments(const Theta& single, std::size_t segments) {
  Theta out;
  out.segments.assign(segments, single.segments.front());
  return out;
}

}  // namespace

std::uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

void generate(const GenerateOptions& options, spdlog::logger& log) {
  if (options.horizon < 1) throw ParameterError("generate: T must be >= 1");
  RngStream rng(seed_or_entropy(options.seed, log));
  systems::Generated g;
  if (options.system == "toy") {
    g = systems::generate_toy(options.horizon, rng,
                              options.unnormalized_sinc ? systems::SincConvention::Unnormalized
                                                        : systems::SincConvention::Normalized);
  } else if (options.system == "narendra-li") {
    g = systems::generate_narendra_li(options.horizon, rng, options.noise_var.value_or(0.0),
                                      options.test_input);
  } else if (options.system == "lgss") {
    g = systems::generate_lgss(options.horizon, rng,
                               options.noise_var.value_or(systems::kLgssMeasurementVar));
  } else {
    throw ParameterError("generate: unknown system '" + options.system + "'");
  }
  auto out = open_for_writing(options.out);
  write_dataset(out, g.data);
  if (!out) throw std::runtime_error("failed writing '" + options.out + "'");
  log.info("wrote {} samples of '{}' to {}", options.horizon, options.system, options.out);
}

LearnSummary learn(const LearnOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const RunConfig cfg = read_run_config(options.config);
  const auto data_path = options.data ? options.data : cfg.io.data;
  if (!data_path) throw ConfigError("$.io.data: no data path in the configuration or on the command line");
  const auto out_dir_opt = options.out_dir ? options.out_dir : cfg.io.out_dir;
  if (!out_dir_opt) throw ConfigError("$.io.out_dir: no output directory in the configuration or on the command line");
  const fs::path out_dir(*out_dir_opt);
  fs::create_directories(out_dir);
  auto log = run_logger(out_dir / "run.log", options.quiet);

  LearnSummary summary;
  summary.seed = seed_or_entropy(options.seed ? options.seed : cfg.learner.seed, *log);
  const Dataset dataset = read_dataset(*data_path);
  SsmConfig ssm = cfg.model.ssm;
  check_dimensions(dataset, ssm, *data_path);
  const ObservedData data = dataset.observed();
  const Basis basis = cfg.basis.basis();
  const MniwParams mniw = cfg.mniw();
  log->info("config {}, data {} ({} samples), {} basis functions", options.config, *data_path,
            dataset.size(), basis.size());

  std::optional<LinearInit> linear;
  if (cfg.model.offset == OffsetKind::Linear) {
    linear = init_linear(data, ssm, mniw);
    if (linear->fallback) {
      log->warn("{}", linear->warning);
    } else {
      ssm.known_offset = linear->offset;
      log->info("linear offset fitted");
    }
  }
  const bool use_linear_start = linear && !linear->fallback;

  ModelFile model;
  model.model = ModelBlock{ssm, ssm.known_offset ? OffsetKind::Fixed : OffsetKind::None};
  model.basis = cfg.basis;
  model.seed = summary.seed;
  model.segmentation.dim = cfg.prior.segmentation_dim;
  const fs::path samples_path = out_dir / "samples.jsonl";

  if (cfg.learner.algorithm == Algorithm::Psaem) {
    if (cfg.learner.chains > 1) log->warn("psaem runs a single chain; ignoring chains = {}", cfg.learner.chains);
    PsaemOptions po;
    po.iterations = cfg.learner.iterations;
    po.pgas.num_particles = cfg.learner.particles;
    po.gamma_exponent = cfg.learner.gamma_exponent;
    po.burn_in = cfg.learner.gamma_burn_in;
    po.fixed_q = cfg.learner.fixed_q;
    RngStream rng(summary.seed, 0);
    auto out = open_for_writing(samples_path);
    std::size_t current = 0;
    std::optional<Theta> init;
    std::optional<MatrixXd> init_x;
    if (use_linear_start) {
      init = linear->theta;
      init_x = linear->states;
    }
    PsaemResult result;
    try {
      result = psaem(ssm, basis, data, mniw, po, rng, init, init_x, [&](const PsaemTraceEntry& e) {
        current = e.k + 1;
        ParameterSample s;
        s.k = e.k + 1;
        s.theta = e.theta;
        s.segmentation.dim = model.segmentation.dim;
        s.gamma = e.gamma;
        out << to_json(s).dump() << '\n';
      });
    } catch (const std::exception& e) {
      log->error("psaem failed at iteration {}: {}", current + 1, e.what());
      throw;
    }
    model.algorithm = Algorithm::Psaem;
    model.theta = result.theta;
  } else {
    GibbsOptions go;
    go.iterations = cfg.learner.iterations;
    go.pgas.num_particles = cfg.learner.particles;
    go.learn_segmentation = cfg.prior.learn_segmentation;
    go.proposal = cfg.prior.proposal;
    go.fixed_q = cfg.learner.fixed_q;
    go.keep_trajectories = false;
    const SegPrior seg_prior = cfg.seg_prior();
    const std::size_t chains = cfg.learner.chains;
    const std::size_t discard = cfg.learner.discard;

    struct ChainResult {
      std::vector<ParameterSample> retained;
      std::size_t proposals = 0, accepts = 0;
      std::exception_ptr error;
      std::size_t failed_at = 0;
    };
    std::vector<ChainResult> results(chains);
    auto chain_file = [&](std::size_t c) { return out_dir / ("samples.chain" + std::to_string(c) + ".jsonl"); };

    auto run_chain = [&](std::size_t c) {
      ChainResult& res = results[c];
      std::size_t k = 0;
      try {
        RngStream rng(summary.seed, c);
        GibbsState init = default_gibbs_init(ssm, basis, data, seg_prior, go.fixed_q,
                                             cfg.prior.segmentation_dim, go.pgas.num_particles, rng);
        if (use_linear_start) {
          if (!go.fixed_q) init.theta = replicate_segments(linear->theta, init.segmentation.num_segments());
          init.x = linear->states;
        }
        auto out = open_for_writing(chain_file(c));
        out << to_json(as_sample(0, c, init, false)).dump() << '\n';
        GibbsSampler sampler(ssm, basis, data, seg_prior, go, rng, std::move(init));
        for (k = 1; k <= go.iterations; ++k) {
          sampler.step();
          const ParameterSample s = as_sample(k, c, sampler.state(), sampler.last_xi_accepted());
          out << to_json(s).dump() << '\n';
          if (k > discard) res.retained.push_back(s);
        }
        res.proposals = sampler.xi_proposals();
        res.accepts = sampler.xi_accepts();
      } catch (...) {
        res.error = std::current_exception();
        res.failed_at = k;
      }
    };

    if (chains == 1) {
      run_chain(0);
    } else {
      std::vector<std::jthread> workers;
      for (std::size_t c = 0; c < chains; ++c) workers.emplace_back(run_chain, c);
    }
    for (std::size_t c = 0; c < chains; ++c) {
      if (!results[c].error) continue;
      try {
        std::rethrow_exception(results[c].error);
      } catch (const std::exception& e) {
        log->error("gibbs chain {} failed at iteration {}: {}", c, results[c].failed_at, e.what());
        throw;
      }
    }
    {
      auto merged = open_for_writing(samples_path);
      for (std::size_t c = 0; c < chains; ++c) {
        std::ifstream in(chain_file(c), std::ios::binary);
        merged << in.rdbuf();
        in.close();
        fs::remove(chain_file(c));
      }
    }
    std::vector<ParameterSample> retained;
    std::size_t proposals = 0, accepts = 0;
    for (auto& r : results) {
      retained.insert(retained.end(), r.retained.begin(), r.retained.end());
      proposals += r.proposals;
      accepts += r.accepts;
    }
    summary.xi_acceptance_rate = proposals == 0 ? 0.0 : static_cast<double>(accepts) / proposals;
    auto [theta, seg] = posterior_summary(retained, cfg.prior.segmentation_dim);
    model.algorithm = Algorithm::Gibbs;
    model.theta = std::move(theta);
    model.segmentation = std::move(seg);
    model.samples = "samples.jsonl";
    model.discard = discard;
    log->info("xi acceptance rate {:.4f} ({} of {} proposals)", summary.xi_acceptance_rate, accepts, proposals);
  }

  summary.model_path = (out_dir / "model.json").string();
  summary.samples_path = samples_path.string();
  write_model_file(summary.model_path, model);
  summary.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  log->info("wrote {} and {}", summary.model_path, summary.samples_path);
  log->info("elapsed {:.2f} s", summary.seconds);
  return summary;
}

void simulate(const SimulateOptions& options, spdlog::logger& log) {
  const ModelFile m = read_model_file(options.model);
  const SsmConfig& ssm = m.model.ssm;
  const Table inputs = read_table(options.data);
  const Eigen::Index horizon = inputs.values.rows();
  const Eigen::Index t_col = inputs.column("t");
  if (t_col < 0) throw DataError(options.data + ": no 't' column");
  MatrixXd u(ssm.n_u, horizon);
  for (int i = 0; i < ssm.n_u; ++i) {
    const Eigen::Index c = inputs.column("u" + std::to_string(i + 1));
    if (c < 0) throw DataError(options.data + ": model expects input column 'u" + std::to_string(i + 1) + "'");
    u.row(i) = inputs.values.col(c).transpose();
  }
  const Basis basis = m.basis.basis();
  const auto draws = m.draws(options.model, options.stride);
  std::optional<RngStream> rng;
  if (options.noise) rng.emplace(seed_or_entropy(options.seed, log));
  std::vector<MatrixXd> outputs;
  outputs.reserve(draws.size());
  for (const auto& d : draws) {
    const ModelView view(ssm, basis, d.theta, d.segmentation);
    outputs.push_back(options.noise ? bfssm::simulate(view, u, *rng).y : simulate_noise_free(view, u).y);
  }
  const bool bands = outputs.size() > 1;
  Table table;
  table.header.push_back("t");
  for (int i = 1; i <= ssm.n_y; ++i) table.header.push_back("y" + std::to_string(i));
  if (bands) {
    for (int i = 1; i <= ssm.n_y; ++i) {
      table.header.push_back("y" + std::to_string(i) + "_q05");
      table.header.push_back("y" + std::to_string(i) + "_q95");
    }
  }
  table.values.resize(horizon, static_cast<Eigen::Index>(table.header.size()));
  std::vector<double> column(outputs.size());
  for (Eigen::Index t = 0; t < horizon; ++t) {
    table.values(t, 0) = inputs.values(t, t_col);
    for (int i = 0; i < ssm.n_y; ++i) {
      for (std::size_t s = 0; s < outputs.size(); ++s) column[s] = outputs[s](i, t);
      const Band b = band(column);
      table.values(t, 1 + i) = b.median;
      if (bands) {
        table.values(t, 1 + ssm.n_y + 2 * i) = b.low;
        table.values(t, 2 + ssm.n_y + 2 * i) = b.high;
      }
    }
  }
  write_table(options.out, table);
  log.info("simulated {} steps over {} parameter set(s) into {}", horizon, outputs.size(), options.out);
}

EvaluateResult evaluate(const std::string& simulated_path, const std::string& truth_path) {
  const Table sim = read_table(simulated_path);
  const Table truth = read_table(truth_path);
  if (sim.values.rows() != truth.values.rows()) {
    throw ShapeError("evaluate: " + simulated_path + " has " + std::to_string(sim.values.rows()) +
                     " rows, " + truth_path + " has " + std::to_string(truth.values.rows()));
  }
  EvaluateResult out;
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t c = 0; c < truth.header.size(); ++c) {
    const std::string& name = truth.header[c];
    if (name.size() < 2 || name[0] != 'y' ||
        !std::all_of(name.begin() + 1, name.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) {
      continue;
    }
    const Eigen::Index sc = sim.column(name);
    if (sc < 0) throw DataError("evaluate: " + simulated_path + " has no column '" + name + "'");
    const Eigen::VectorXd err = sim.values.col(sc) - truth.values.col(static_cast<Eigen::Index>(c));
    const double sq = err.squaredNorm();
    out.rmse.emplace_back(name, std::sqrt(sq / static_cast<double>(err.size())));
    total += sq;
    count += static_cast<std::size_t>(err.size());
  }
  if (out.rmse.empty()) throw DataError("evaluate: " + truth_path + " has no output columns");
  out.pooled = std::sqrt(total / static_cast<double>(count));
  return out;
}

void fgrid(const FgridOptions& options, spdlog::logger& log) {
  const ModelFile m = read_model_file(options.model);
  const SsmConfig& ssm = m.model.ssm;
  const int dim = ssm.n_x + ssm.n_u;
  const std::size_t nd = options.dims.size();
  if (nd < 1 || nd > 2) throw ParameterError("fgrid: give one or two grid dimensions");
  if (options.from.size() != nd || options.to.size() != nd || options.points.size() != nd) {
    throw ParameterError("fgrid: --from, --to and --points need one value per --dim");
  }
  for (std::size_t i = 0; i < nd; ++i) {
    if (options.dims[i] < 0 || options.dims[i] >= dim) {
      throw ParameterError("fgrid: dimension " + std::to_string(options.dims[i]) + " is outside (x, u)");
    }
    if (options.points[i] < 1) throw ParameterError("fgrid: --points must be >= 1");
  }
  if (nd == 2 && options.dims[0] == options.dims[1]) throw ParameterError("fgrid: repeated dimension");
  VectorXd base = VectorXd::Zero(dim);
  if (!options.at.empty()) {
    if (static_cast<int>(options.at.size()) != dim) {
      throw ParameterError("fgrid: --at needs n_x + n_u = " + std::to_string(dim) + " values");
    }
    base = Eigen::Map<const VectorXd>(options.at.data(), dim);
  }
  const auto& half_widths = m.basis.domain.half_widths;
  for (std::size_t i = 0; i < nd; ++i) {
    const double bound = half_widths[static_cast<std::size_t>(options.dims[i])];
    if (std::min(options.from[i], options.to[i]) < -bound || std::max(options.from[i], options.to[i]) > bound) {
      log.warn("grid on dimension {} leaves the basis domain [-{}, {}]", options.dims[i] + 1, bound, bound);
    }
  }

  const Basis basis = m.basis.basis();
  const auto draws = m.draws(options.model, options.stride);
  auto axis = [&](std::size_t i, int j) {
    const int n = options.points[i];
    return n == 1 ? options.from[i] : options.from[i] + (options.to[i] - options.from[i]) * j / (n - 1);
  };
  const int n0 = options.points[0];
  const int n1 = nd == 2 ? options.points[1] : 1;

  Table table;
  for (std::size_t i = 0; i < nd; ++i) table.header.push_back("z" + std::to_string(options.dims[i] + 1));
  for (int i = 1; i <= ssm.n_x; ++i) {
    table.header.push_back("f" + std::to_string(i));
    table.header.push_back("f" + std::to_string(i) + "_q05");
    table.header.push_back("f" + std::to_string(i) + "_q95");
  }
  table.values.resize(static_cast<Eigen::Index>(n0) * n1, static_cast<Eigen::Index>(table.header.size()));
  std::vector<std::vector<double>> values(static_cast<std::size_t>(ssm.n_x), std::vector<double>(draws.size()));
  Eigen::Index row = 0;
  for (int a = 0; a < n0; ++a) {
    for (int b = 0; b < n1; ++b, ++row) {
      VectorXd z = base;
      z[options.dims[0]] = axis(0, a);
      if (nd == 2) z[options.dims[1]] = axis(1, b);
      const VectorXd x = z.head(ssm.n_x);
      const VectorXd u = z.tail(ssm.n_u);
      for (std::size_t s = 0; s < draws.size(); ++s) {
        const VectorXd f = transition_mean(draws[s].theta, draws[s].segmentation, basis, ssm, x, u);
        for (int i = 0; i < ssm.n_x; ++i) values[static_cast<std::size_t>(i)][s] = f[i];
      }
      Eigen::Index col = 0;
      for (std::size_t i = 0; i < nd; ++i) table.values(row, col++) = z[options.dims[i]];
      for (int i = 0; i < ssm.n_x; ++i) {
        const Band bnd = band(values[static_cast<std::size_t>(i)]);
        table.values(row, col++) = bnd.median;
        table.values(row, col++) = bnd.low;
        table.values(row, col++) = bnd.high;
      }
    }
  }
  write_table(options.out, table);
  log.info("wrote {} grid points over {} parameter set(s) to {}", row, draws.size(), options.out);
}

}  // namespace bfssm::cli
