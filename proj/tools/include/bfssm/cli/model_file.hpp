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
#include <vector>

#include <nlohmann/json.hpp>

#include "bfssm/cli/config.hpp"

namespace bfssm::cli {

/// Parameter draw (gibbs) or iterate (psaem) as stored one per JSONL line.
struct ParameterSample {
  std::size_t k = 0;
  std::size_t chain = 0;
  Theta theta;
  Segmentation segmentation;
  bool accepted = false;
  std::optional<double> gamma;
};

nlohmann::json to_json(const ParameterSample& s);
ParameterSample sample_from_json(const nlohmann::json& node, int segmentation_dim,
                                 const std::string& path);

/// Learned model: configuration with the offset resolved, a point estimate
/// and, for gibbs, the sample file the estimate summarizes.
struct ModelFile {
  Algorithm algorithm = Algorithm::Psaem;
  ModelBlock model;
  BasisBlock basis;
  Theta theta;
  Segmentation segmentation;
  std::optional<std::string> samples;  // relative to the model file
  std::size_t discard = 0;
  std::uint64_t seed = 0;

  /// Parameter sets to propagate: every retained gibbs draw (thinned by
  /// `stride`) or the single point estimate.
  std::vector<ParameterSample> draws(const std::string& model_path, std::size_t stride) const;
};

nlohmann::json to_json(const ModelFile& m);
ModelFile model_from_json(const nlohmann::json& doc);
ModelFile read_model_file(const std::string& path);
void write_model_file(const std::string& path, const ModelFile& m);

std::vector<ParameterSample> read_samples(const std::string& path, int segmentation_dim);

}  // namespace bfssm::cli
