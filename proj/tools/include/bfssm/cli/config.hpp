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

#include "bfssm/basis.hpp"
#include "bfssm/errors.hpp"
#include "bfssm/learning.hpp"
#include "bfssm/model.hpp"

namespace bfssm::cli {

/// Schema violation in a run configuration or model file; the message starts
/// with the JSON path of the offending entry.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class OffsetKind { None, Fixed, Linear };

struct ModelBlock {
  SsmConfig ssm;  // known_offset holds the fixed offset when kind == Fixed
  OffsetKind offset = OffsetKind::None;
};

struct BasisBlock {
  Domain domain;
  std::vector<int> functions_per_dim;
  /// Empty means an (almost) flat prior with `flat_variance` on every coefficient.
  std::optional<CovarianceFunction> covariance;
  double flat_variance = 1e12;

  BasisSpec spec() const { return BasisSpec::tensor(functions_per_dim); }
  Basis basis() const { return Basis(spec(), domain); }
  MatrixXd prior_v() const;
};

struct PriorBlock {
  double dof = 0.0;
  MatrixXd scale;
  SegPrior segmentation;  // mniw is filled in by RunConfig::seg_prior()
  int segmentation_dim = 0;
  bool learn_segmentation = false;
  XiProposal proposal;
};

enum class Algorithm { Gibbs, Psaem };

struct LearnerBlock {
  Algorithm algorithm = Algorithm::Gibbs;
  std::size_t iterations = 1000;
  std::size_t particles = 30;
  double gamma_exponent = 2.0 / 3.0;
  std::size_t gamma_burn_in = 0;
  /// Leading Gibbs iterations left out of posterior summaries.
  std::size_t discard = 0;
  std::optional<std::uint64_t> seed;
  std::size_t chains = 1;
  std::optional<MatrixXd> fixed_q;
};

struct IoBlock {
  std::optional<std::string> data;
  std::optional<std::string> out_dir;
};

struct RunConfig {
  ModelBlock model;
  BasisBlock basis;
  PriorBlock prior;
  LearnerBlock learner;
  IoBlock io;

  MniwParams mniw() const;
  SegPrior seg_prior() const;
};

RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig read_run_config(const std::string& path);

/// The model and basis blocks alone, as stored in model files.
ModelBlock parse_model_block(const nlohmann::json& node, const std::string& path);
BasisBlock parse_basis_block(const nlohmann::json& node, const std::string& path);
nlohmann::json to_json(const ModelBlock& model);
nlohmann::json to_json(const BasisBlock& basis);

nlohmann::json matrix_to_json(const MatrixXd& m);
MatrixXd matrix_from_json(const nlohmann::json& node, const std::string& path);

}  // namespace bfssm::cli
