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

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <spdlog/logger.h>

namespace bfssm::cli {

/// Seed from the OS entropy source, used when none is given.
std::uint64_t entropy_seed();

struct GenerateOptions {
  std::string system;  // toy | narendra-li | lgss
  long long horizon = 0;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<double> noise_var;
  bool test_input = false;
  bool unnormalized_sinc = false;
};

struct LearnOptions {
  std::string config;
  std::optional<std::string> data;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

struct LearnSummary {
  std::uint64_t seed = 0;
  double seconds = 0.0;
  double xi_acceptance_rate = 0.0;
  std::string model_path;
  std::string samples_path;
};

struct SimulateOptions {
  std::string model;
  std::string data;
  std::string out;
  std::size_t stride = 1;
  bool noise = false;
  std::optional<std::uint64_t> seed;
};

struct EvaluateResult {
  std::vector<std::pair<std::string, double>> rmse;  // per output channel
  double pooled = 0.0;
};

struct FgridOptions {
  std::string model;
  std::vector<int> dims;  // 0-based positions in (x, u)
  std::vector<double> from;
  std::vector<double> to;
  std::vector<int> points;
  std::vector<double> at;  // values of the remaining coordinates (default 0)
  std::string out;
  std::size_t stride = 1;
};

void generate(const GenerateOptions& options, spdlog::logger& log);
LearnSummary learn(const LearnOptions& options);
void simulate(const SimulateOptions& options, spdlog::logger& log);
EvaluateResult evaluate(const std::string& simulated_path, const std::string& truth_path);
void fgrid(const FgridOptions& options, spdlog::logger& log);

/// Full command-line entry point; returns the process exit code.
int run(int argc, char** argv);

}  // namespace bfssm::cli
