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

#include "bfssm/cli/model_file.hpp"

#include <filesystem>
#include <fstream>

namespace bfssm::cli {
namespace {

using nlohmann::json;

const json& member(const json& node, const char* key, const std::string& path) {
  const auto it = node.find(key);
  if (it == node.end()) throw ConfigError(path + "." + key + ": required key is missing");
  return *it;
}

json theta_to_json(const Theta& theta, const Segmentation& seg) {
  json a = json::array(), q = json::array();
  for (const auto& s : theta.segments) {
    a.push_back(matrix_to_json(s.A));
    q.push_back(matrix_to_json(s.Q));
  }
  return {{"A", a}, {"Q", q}, {"xi", seg.points}};
}

void theta_from_json(const json& node, const std::string& path, Theta& theta, Segmentation& seg) {
  const json& a = member(node, "A", path);
  const json& q = member(node, "Q", path);
  const json& xi = member(node, "xi", path);
  if (!a.is_array() || !q.is_array() || a.size() != q.size()) {
    throw ConfigError(path + ": A and Q must be arrays with one entry per segment");
  }
  theta.segments.clear();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::string idx = "[" + std::to_string(i) + "]";
    theta.segments.push_back({matrix_from_json(a[i], path + ".A" + idx), matrix_from_json(q[i], path + ".Q" + idx)});
  }
  if (!xi.is_array()) throw ConfigError(path + ".xi: expected an array of numbers");
  seg.points = xi.get<std::vector<double>>();
  if (seg.num_segments() != theta.segments.size()) {
    throw ConfigError(path + ": number of segments does not match xi");
  }
}

}  // namespace

json to_json(const ParameterSample& s) {
  json out{{"k", s.k}, {"chain", s.chain}};
  const json theta = theta_to_json(s.theta, s.segmentation);
  out["A"] = theta["A"];
  out["Q"] = theta["Q"];
  out["xi"] = theta["xi"];
  if (s.gamma) {
    out["gamma"] = *s.gamma;
  } else {
    out["accepted"] = s.accepted;
  }
  return out;
}

ParameterSample sample_from_json(const json& node, int segmentation_dim, const std::string& path) {
  ParameterSample s;
  s.k = member(node, "k", path).get<std::size_t>();
  if (node.contains("chain")) s.chain = node["chain"].get<std::size_t>();
  theta_from_json(node, path, s.theta, s.segmentation);
  s.segmentation.dim = segmentation_dim;
  if (node.contains("accepted")) s.accepted = node["accepted"].get<bool>();
  if (node.contains("gamma")) s.gamma = node["gamma"].get<double>();
  return s;
}

std::vector<ParameterSample> read_samples(const std::string& path, int segmentation_dim) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open sample file '" + path + "'");
  std::vector<ParameterSample> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(n);
    json node;
    try {
      node = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(where + ": invalid JSON: " + e.what());
    }
    out.push_back(sample_from_json(node, segmentation_dim, where));
  }
  return out;
}

std::vector<ParameterSample> ModelFile::draws(const std::string& model_path, std::size_t stride) const {
  if (algorithm == Algorithm::Psaem || !samples) {
    ParameterSample point;
    point.theta = theta;
    point.segmentation = segmentation;
    return {point};
  }
  const auto dir = std::filesystem::path(model_path).parent_path();
  auto all = read_samples((dir / *samples).string(), segmentation.dim);
  std::vector<ParameterSample> kept;
  std::size_t seen = 0;
  for (auto& s : all) {
    if (s.k <= discard) continue;
    if (seen++ % std::max<std::size_t>(stride, 1) == 0) kept.push_back(std::move(s));
  }
  if (kept.empty()) throw DataError(model_path + ": no samples remain after discarding burn-in");
  return kept;
}

json to_json(const ModelFile& m) {
  json out{{"format", "bfssm-model"},
           {"version", 1},
           {"algorithm", m.algorithm == Algorithm::Gibbs ? "gibbs" : "psaem"},
           {"model", to_json(m.model)},
           {"basis", to_json(m.basis)},
           {"segmentation_dim", m.segmentation.dim},
           {"theta", theta_to_json(m.theta, m.segmentation)},
           {"discard", m.discard},
           {"seed", m.seed}};
  if (m.samples) out["samples"] = *m.samples;
  return out;
}

ModelFile model_from_json(const json& doc) {
  const std::string root = "$";
  if (!doc.is_object() || doc.value("format", "") != "bfssm-model") {
    throw ConfigError(root + ".format: not a bfssm model file");
  }
  ModelFile m;
  const std::string algorithm = member(doc, "algorithm", root).get<std::string>();
  if (algorithm == "gibbs") {
    m.algorithm = Algorithm::Gibbs;
  } else if (algorithm == "psaem") {
    m.algorithm = Algorithm::Psaem;
  } else {
    throw ConfigError(root + ".algorithm: expected \"gibbs\" or \"psaem\"");
  }
  m.model = parse_model_block(member(doc, "model", root), root + ".model");
  m.basis = parse_basis_block(member(doc, "basis", root), root + ".basis");
  m.segmentation.dim = doc.value("segmentation_dim", 0);
  theta_from_json(member(doc, "theta", root), root + ".theta", m.theta, m.segmentation);
  try {
    m.theta.validate(m.model.ssm.n_x, m.basis.spec().size(), m.segmentation.num_segments());
  } catch (const Error& e) {
    throw ConfigError(root + ".theta: " + e.what());
  }
  if (doc.contains("samples")) m.samples = doc["samples"].get<std::string>();
  m.discard = doc.value("discard", std::size_t{0});
  m.seed = doc.value("seed", std::uint64_t{0});
  return m;
}

ModelFile read_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open model file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
  return model_from_json(doc);
}

void write_model_file(const std::string& path, const ModelFile& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << to_json(m).dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace bfssm::cli
