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

#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>

#include "bfssm/cli/commands.hpp"
#include "bfssm/cli/config.hpp"
#include "bfssm/errors.hpp"

namespace bfssm::cli {
namespace {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kBadData = 3,
  kNumerical = 4,
};

std::shared_ptr<spdlog::logger> console_logger(bool quiet) {
  auto log = std::make_shared<spdlog::logger>("bfssm", std::make_shared<spdlog::sinks::stderr_color_sink_mt>());
  log->set_pattern("[%l] %v");
  if (quiet) log->set_level(spdlog::level::warn);
  return log;
}

int report(const std::string& prefix, const std::exception& e, int code) {
  std::cerr << "bfssm: " << prefix << e.what() << '\n';
  return code;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Bayesian learning of nonlinear state-space models with basis-function expansions"};
  app.require_subcommand(1);
  app.fallthrough();
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Only print warnings and errors");

  GenerateOptions gen;
  std::optional<std::uint64_t> gen_seed;
  auto* gen_cmd = app.add_subcommand("generate", "Simulate a benchmark system to CSV");
  gen_cmd->add_option("--system", gen.system, "toy, narendra-li or lgss")
      ->required()
      ->check(CLI::IsMember({"toy", "narendra-li", "lgss"}));
  gen_cmd->add_option("--T", gen.horizon, "Number of samples")->required()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen_seed, "RNG seed (OS entropy when omitted)");
  gen_cmd->add_option("--out", gen.out, "Output CSV")->required();
  gen_cmd->add_option("--noise-var", gen.noise_var, "Measurement noise variance")->check(CLI::NonNegativeNumber);
  gen_cmd->add_flag("--test-input", gen.test_input, "Use the deterministic test input (narendra-li)");
  gen_cmd->add_flag("--unnormalized-sinc", gen.unnormalized_sinc, "sin(x)/x instead of sin(pi x)/(pi x) (toy)");

  LearnOptions learn_opts;
  auto* learn_cmd = app.add_subcommand("learn", "Learn a model from data");
  learn_cmd->add_option("--config", learn_opts.config, "Run configuration (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  learn_cmd->add_option("--data", learn_opts.data, "Training CSV (overrides io.data)");
  learn_cmd->add_option("--out-dir", learn_opts.out_dir, "Output directory (overrides io.out_dir)");
  learn_cmd->add_option("--seed", learn_opts.seed, "RNG seed (overrides learner.seed)");

  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Free-run simulation of a learned model");
  sim_cmd->add_option("--model", sim.model, "model.json written by learn")->required()->check(CLI::ExistingFile);
  sim_cmd->add_option("--data", sim.data, "CSV providing t and the input columns")
      ->required()
      ->check(CLI::ExistingFile);
  sim_cmd->add_option("--out", sim.out, "Output CSV")->required();
  sim_cmd->add_option("--stride", sim.stride, "Use every n-th retained sample")->check(CLI::PositiveNumber);
  sim_cmd->add_flag("--noise", sim.noise, "Include process and measurement noise");
  sim_cmd->add_option("--seed", sim.seed, "RNG seed for --noise");

  std::string eval_sim, eval_truth;
  auto* eval_cmd = app.add_subcommand("evaluate", "RMSE between a simulation and ground truth");
  eval_cmd->add_option("--sim", eval_sim, "Simulated CSV")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--truth", eval_truth, "Ground-truth CSV")->required()->check(CLI::ExistingFile);

  FgridOptions grid;
  std::vector<int> grid_dims;
  auto* grid_cmd = app.add_subcommand("fgrid", "Evaluate the learned transition function on a grid");
  grid_cmd->add_option("--model", grid.model, "model.json written by learn")->required()->check(CLI::ExistingFile);
  grid_cmd->add_option("--dim", grid_dims, "1-based positions in (x, u) to vary (one or two)")
      ->required()
      ->expected(1, 2);
  grid_cmd->add_option("--from", grid.from, "Grid start per dimension")->required()->expected(1, 2);
  grid_cmd->add_option("--to", grid.to, "Grid end per dimension")->required()->expected(1, 2);
  grid_cmd->add_option("--points", grid.points, "Grid size per dimension")->required()->expected(1, 2);
  grid_cmd->add_option("--at", grid.at, "Values of all (x, u) coordinates off the grid");
  grid_cmd->add_option("--stride", grid.stride, "Use every n-th retained sample")->check(CLI::PositiveNumber);
  grid_cmd->add_option("--out", grid.out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  auto log = console_logger(quiet);
  try {
    if (*gen_cmd) {
      gen.seed = gen_seed;
      generate(gen, *log);
    } else if (*learn_cmd) {
      learn_opts.quiet = quiet;
      const LearnSummary s = learn(learn_opts);
      nlohmann::json out{{"seed", s.seed},
                         {"seconds", s.seconds},
                         {"xi_acceptance_rate", s.xi_acceptance_rate},
                         {"model", s.model_path},
                         {"samples", s.samples_path}};
      std::cout << out.dump(2) << '\n';
    } else if (*sim_cmd) {
      simulate(sim, *log);
    } else if (*eval_cmd) {
      const EvaluateResult r = evaluate(eval_sim, eval_truth);
      nlohmann::json out;
      for (const auto& [name, value] : r.rmse) out["rmse"][name] = value;
      out["rmse_pooled"] = r.pooled;
      std::cout << out.dump(2) << '\n';
    } else if (*grid_cmd) {
      for (int d : grid_dims) grid.dims.push_back(d - 1);
      fgrid(grid, *log);
    }
  } catch (const ConfigError& e) {
    return report("config error: ", e, kUsage);
  } catch (const ParameterError& e) {
    return report("invalid parameter: ", e, kUsage);
  } catch (const DataError& e) {
    return report("data error: ", e, kBadData);
  } catch (const ShapeError& e) {
    return report("shape mismatch: ", e, kBadData);
  } catch (const NumericalError& e) {
    return report("numerical failure: ", e, kNumerical);
  } catch (const CovarianceError& e) {
    return report("numerical failure: ", e, kNumerical);
  } catch (const WeightError& e) {
    return report("numerical failure: ", e, kNumerical);
  } catch (const std::exception& e) {
    return report("", e, kFailure);
  }
  return kOk;
}

}  // namespace bfssm::cli
