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

#include "bfssm/cli/config.hpp"

#include <fstream>
#include <set>
#include <utility>

#include <Eigen/Cholesky>

namespace bfssm::cli {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

// Tracks which keys of a JSON object were read so leftovers can be reported.
class ObjectReader {
 public:
  ObjectReader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail(path_, "expected an object");
  }

  std::string child(const std::string& key) const { return path_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  const json& require(const std::string& key) {
    const json* p = find(key);
    if (p == nullptr) fail(child(key), "required key is missing");
    return *p;
  }

  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!seen_.count(key)) fail(child(key), "unknown key");
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

double as_double(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

long long as_integer(const json& j, const std::string& path, long long min_value) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  const auto v = j.get<long long>();
  if (v < min_value) fail(path, "must be >= " + std::to_string(min_value));
  return v;
}

double as_positive(const json& j, const std::string& path) {
  const double v = as_double(j, path);
  if (!(v > 0.0)) fail(path, "must be positive");
  return v;
}

bool as_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected true or false");
  return j.get<bool>();
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

std::vector<double> as_vector(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(as_double(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

VectorXd as_eigen_vector(const json& j, const std::string& path, Eigen::Index size) {
  const auto v = as_vector(j, path);
  if (static_cast<Eigen::Index>(v.size()) != size) {
    fail(path, "expected " + std::to_string(size) + " entries, got " + std::to_string(v.size()));
  }
  return Eigen::Map<const VectorXd>(v.data(), size);
}

MatrixXd sized_matrix(const json& j, const std::string& path, Eigen::Index rows, Eigen::Index cols) {
  MatrixXd m = matrix_from_json(j, path);
  if (m.rows() != rows || m.cols() != cols) {
    fail(path, "expected a " + std::to_string(rows) + "x" + std::to_string(cols) + " matrix, got " +
                   std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  return m;
}

MatrixXd spd_matrix(const json& j, const std::string& path, Eigen::Index n) {
  MatrixXd m = sized_matrix(j, path, n, n);
  if (!m.isApprox(m.transpose(), 1e-12) || Eigen::LLT<MatrixXd>(m).info() != Eigen::Success) {
    fail(path, "must be symmetric positive definite");
  }
  return m;
}

InitialState parse_initial(const json* node, const std::string& path, int n_x) {
  InitialState init{VectorXd::Zero(n_x), MatrixXd::Identity(n_x, n_x)};
  if (node == nullptr) return init;
  ObjectReader r(*node, path);
  if (const json* m = r.find("mean")) init.mean = as_eigen_vector(*m, r.child("mean"), n_x);
  if (const json* c = r.find("cov")) {
    init.cov = sized_matrix(*c, r.child("cov"), n_x, n_x);
    if (!init.cov.isZero(0.0) && Eigen::LLT<MatrixXd>(init.cov).info() != Eigen::Success) {
      fail(r.child("cov"), "must be positive definite or all zero");
    }
  }
  r.finish();
  return init;
}

XiProposal parse_proposal(const json& node, const std::string& path) {
  ObjectReader r(node, path);
  XiProposal p;
  if (const json* v = r.find("relocate")) p.relocate = as_double(*v, r.child("relocate"));
  if (const json* v = r.find("birth")) p.birth = as_double(*v, r.child("birth"));
  if (const json* v = r.find("death")) p.death = as_double(*v, r.child("death"));
  if (const json* v = r.find("sigma_rw")) p.sigma_rw = as_positive(*v, r.child("sigma_rw"));
  if (const json* v = r.find("min_segment_transitions")) {
    p.min_segment_transitions = static_cast<std::size_t>(as_integer(*v, r.child("min_segment_transitions"), 0));
  }
  r.finish();
  try {
    p.validate();
  } catch (const Error& e) {
    fail(path, e.what());
  }
  return p;
}

void parse_segmentation(const json& node, const std::string& path, int n_x, PriorBlock& prior) {
  ObjectReader r(node, path);
  SegPrior& seg = prior.segmentation;
  if (const json* v = r.find("dim")) {
    prior.segmentation_dim = static_cast<int>(as_integer(*v, r.child("dim"), 0));
    if (prior.segmentation_dim >= n_x) fail(r.child("dim"), "must index a state dimension");
  }
  if (const json* v = r.find("learn")) prior.learn_segmentation = as_bool(*v, r.child("learn"));
  if (const json* v = r.find("geometric_p")) {
    seg.geometric_p = as_double(*v, r.child("geometric_p"));
    if (!(seg.geometric_p > 0.0 && seg.geometric_p <= 1.0)) fail(r.child("geometric_p"), "must lie in (0, 1]");
  }
  if (const json* v = r.find("lower")) seg.lower = as_double(*v, r.child("lower"));
  if (const json* v = r.find("upper")) seg.upper = as_double(*v, r.child("upper"));
  if (const json* v = r.find("grid")) seg.grid = as_vector(*v, r.child("grid"));
  if (const json* v = r.find("pinned")) seg.pinned = as_vector(*v, r.child("pinned"));
  if (const json* v = r.find("proposal")) prior.proposal = parse_proposal(*v, r.child("proposal"));
  r.finish();
  try {
    seg.validate();
  } catch (const Error& e) {
    fail(path, e.what());
  }
}

PriorBlock parse_prior(const json& node, const std::string& path, int n_x) {
  ObjectReader r(node, path);
  PriorBlock p;
  p.dof = as_double(r.require("dof"), r.child("dof"));
  if (!(p.dof > n_x - 1)) fail(r.child("dof"), "must exceed n_x - 1");
  p.scale = spd_matrix(r.require("scale"), r.child("scale"), n_x);
  if (const json* s = r.find("segmentation")) parse_segmentation(*s, r.child("segmentation"), n_x, p);
  r.finish();
  return p;
}

LearnerBlock parse_learner(const json& node, const std::string& path, int n_x) {
  ObjectReader r(node, path);
  LearnerBlock l;
  const std::string algorithm = as_string(r.require("algorithm"), r.child("algorithm"));
  if (algorithm == "gibbs") {
    l.algorithm = Algorithm::Gibbs;
  } else if (algorithm == "psaem") {
    l.algorithm = Algorithm::Psaem;
  } else {
    fail(r.child("algorithm"), "expected \"gibbs\" or \"psaem\"");
  }
  l.iterations = static_cast<std::size_t>(as_integer(r.require("iterations"), r.child("iterations"), 1));
  if (const json* v = r.find("particles")) {
    l.particles = static_cast<std::size_t>(as_integer(*v, r.child("particles"), 1));
  }
  if (const json* v = r.find("gamma_exponent")) {
    l.gamma_exponent = as_double(*v, r.child("gamma_exponent"));
    if (!(l.gamma_exponent > 0.5 && l.gamma_exponent <= 1.0)) {
      fail(r.child("gamma_exponent"), "must lie in (0.5, 1]");
    }
  }
  if (const json* v = r.find("gamma_burn_in")) {
    l.gamma_burn_in = static_cast<std::size_t>(as_integer(*v, r.child("gamma_burn_in"), 0));
  }
  if (const json* v = r.find("discard")) {
    l.discard = static_cast<std::size_t>(as_integer(*v, r.child("discard"), 0));
    if (l.discard >= l.iterations) fail(r.child("discard"), "must be smaller than iterations");
  }
  if (const json* v = r.find("seed")) {
    if (!v->is_number_unsigned()) fail(r.child("seed"), "expected a non-negative integer");
    l.seed = v->get<std::uint64_t>();
  }
  if (const json* v = r.find("chains")) l.chains = static_cast<std::size_t>(as_integer(*v, r.child("chains"), 1));
  if (const json* v = r.find("fixed_q")) l.fixed_q = spd_matrix(*v, r.child("fixed_q"), n_x);
  r.finish();
  return l;
}

IoBlock parse_io(const json& node, const std::string& path) {
  ObjectReader r(node, path);
  IoBlock io;
  if (const json* v = r.find("data")) io.data = as_string(*v, r.child("data"));
  if (const json* v = r.find("out_dir")) io.out_dir = as_string(*v, r.child("out_dir"));
  r.finish();
  return io;
}

}  // namespace

json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd matrix_from_json(const json& node, const std::string& path) {
  if (!node.is_array()) fail(path, "expected a matrix as an array of rows");
  const auto rows = static_cast<Eigen::Index>(node.size());
  if (rows == 0) return MatrixXd();
  const json& first = node[0];
  if (!first.is_array()) fail(path + "[0]", "expected an array of numbers");
  const auto cols = static_cast<Eigen::Index>(first.size());
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const std::string row_path = path + "[" + std::to_string(i) + "]";
    const auto row = as_vector(node[static_cast<std::size_t>(i)], row_path);
    if (static_cast<Eigen::Index>(row.size()) != cols) fail(row_path, "ragged matrix row");
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = row[static_cast<std::size_t>(j)];
  }
  return m;
}

MatrixXd BasisBlock::prior_v() const {
  if (covariance) return build_prior_V(spec(), domain, *covariance);
  const auto m = static_cast<Eigen::Index>(spec().size());
  return flat_variance * MatrixXd::Identity(m, m);
}

MniwParams RunConfig::mniw() const {
  const auto m = static_cast<Eigen::Index>(basis.spec().size());
  return {MatrixXd::Zero(model.ssm.n_x, m), basis.prior_v(), prior.scale, prior.dof};
}

SegPrior RunConfig::seg_prior() const {
  SegPrior s = prior.segmentation;
  s.mniw = mniw();
  return s;
}

ModelBlock parse_model_block(const json& node, const std::string& path) {
  ObjectReader r(node, path);
  ModelBlock out;
  SsmConfig& c = out.ssm;
  c.n_x = static_cast<int>(as_integer(r.require("n_x"), r.child("n_x"), 1));
  if (const json* v = r.find("n_u")) c.n_u = static_cast<int>(as_integer(*v, r.child("n_u"), 0));
  c.n_y = static_cast<int>(as_integer(r.require("n_y"), r.child("n_y"), 1));

  ObjectReader obs(r.require("observation"), r.child("observation"));
  c.observation.linear.state_gain = sized_matrix(obs.require("state_gain"), obs.child("state_gain"), c.n_y, c.n_x);
  if (const json* v = obs.find("input_gain")) {
    c.observation.linear.input_gain = sized_matrix(*v, obs.child("input_gain"), c.n_y, c.n_u);
  } else {
    c.observation.linear.input_gain = MatrixXd::Zero(c.n_y, c.n_u);
  }
  c.observation.noise_cov = spd_matrix(obs.require("noise_cov"), obs.child("noise_cov"), c.n_y);
  obs.finish();

  c.initial = parse_initial(r.find("initial"), r.child("initial"), c.n_x);

  if (const json* v = r.find("offset")) {
    ObjectReader off(*v, r.child("offset"));
    const std::string kind = as_string(off.require("kind"), off.child("kind"));
    if (kind == "none") {
      out.offset = OffsetKind::None;
    } else if (kind == "linear") {
      out.offset = OffsetKind::Linear;
    } else if (kind == "fixed") {
      out.offset = OffsetKind::Fixed;
      LinearMap map;
      map.state_gain = sized_matrix(off.require("state_gain"), off.child("state_gain"), c.n_x, c.n_x);
      if (const json* g = off.find("input_gain")) {
        map.input_gain = sized_matrix(*g, off.child("input_gain"), c.n_x, c.n_u);
      } else {
        map.input_gain = MatrixXd::Zero(c.n_x, c.n_u);
      }
      c.known_offset = std::move(map);
    } else {
      fail(off.child("kind"), "expected \"none\", \"fixed\" or \"linear\"");
    }
    off.finish();
  }
  r.finish();
  try {
    c.validate();
  } catch (const Error& e) {
    fail(path, e.what());
  }
  return out;
}

BasisBlock parse_basis_block(const json& node, const std::string& path) {
  ObjectReader r(node, path);
  BasisBlock b;
  b.domain.half_widths = as_vector(r.require("half_widths"), r.child("half_widths"));
  for (std::size_t i = 0; i < b.domain.half_widths.size(); ++i) {
    if (!(b.domain.half_widths[i] > 0.0)) fail(r.child("half_widths") + "[" + std::to_string(i) + "]", "must be positive");
  }
  const json& counts = r.require("functions_per_dim");
  if (!counts.is_array()) fail(r.child("functions_per_dim"), "expected an array of integers");
  for (std::size_t i = 0; i < counts.size(); ++i) {
    b.functions_per_dim.push_back(static_cast<int>(
        as_integer(counts[i], r.child("functions_per_dim") + "[" + std::to_string(i) + "]", 1)));
  }
  if (b.functions_per_dim.size() != b.domain.half_widths.size()) {
    fail(r.child("functions_per_dim"), "must have one entry per domain dimension");
  }
  if (const json* v = r.find("covariance")) {
    ObjectReader cov(*v, r.child("covariance"));
    const std::string kind = as_string(cov.require("kind"), cov.child("kind"));
    if (kind == "flat") {
      if (const json* f = cov.find("variance")) b.flat_variance = as_positive(*f, cov.child("variance"));
    } else if (kind == "se" || kind == "matern") {
      const double s_f = as_positive(cov.require("s_f"), cov.child("s_f"));
      const double l = as_positive(cov.require("length_scale"), cov.child("length_scale"));
      if (kind == "se") {
        b.covariance = CovarianceFunction::squared_exponential(s_f, l);
      } else {
        b.covariance = CovarianceFunction::matern(s_f, l, as_positive(cov.require("nu"), cov.child("nu")));
      }
    } else {
      fail(cov.child("kind"), "expected \"se\", \"matern\" or \"flat\"");
    }
    cov.finish();
  }
  r.finish();
  return b;
}

json to_json(const ModelBlock& model) {
  const SsmConfig& c = model.ssm;
  json out{{"n_x", c.n_x},
           {"n_u", c.n_u},
           {"n_y", c.n_y},
           {"observation",
            {{"state_gain", matrix_to_json(c.observation.linear.state_gain)},
             {"input_gain", matrix_to_json(c.observation.linear.input_gain)},
             {"noise_cov", matrix_to_json(c.observation.noise_cov)}}},
           {"initial",
            {{"mean", std::vector<double>(c.initial.mean.data(), c.initial.mean.data() + c.initial.mean.size())},
             {"cov", matrix_to_json(c.initial.cov)}}}};
  if (c.known_offset) {
    out["offset"] = {{"kind", "fixed"},
                     {"state_gain", matrix_to_json(c.known_offset->state_gain)},
                     {"input_gain", matrix_to_json(c.known_offset->input_gain)}};
  } else {
    out["offset"] = {{"kind", "none"}};
  }
  return out;
}

json to_json(const BasisBlock& basis) {
  json out{{"half_widths", basis.domain.half_widths}, {"functions_per_dim", basis.functions_per_dim}};
  if (!basis.covariance) {
    out["covariance"] = {{"kind", "flat"}, {"variance", basis.flat_variance}};
  } else {
    const auto& cov = *basis.covariance;
    if (cov.kind == CovarianceKind::SquaredExponential) {
      out["covariance"] = {{"kind", "se"}, {"s_f", cov.s_f}, {"length_scale", cov.length_scale}};
    } else {
      out["covariance"] = {{"kind", "matern"}, {"s_f", cov.s_f}, {"length_scale", cov.length_scale}, {"nu", cov.nu}};
    }
  }
  return out;
}

RunConfig parse_run_config(const json& doc) {
  ObjectReader r(doc, "$");
  RunConfig cfg;
  cfg.model = parse_model_block(r.require("model"), r.child("model"));
  const int n_x = cfg.model.ssm.n_x;
  cfg.basis = parse_basis_block(r.require("basis"), r.child("basis"));
  if (cfg.basis.domain.dim() != static_cast<std::size_t>(n_x + cfg.model.ssm.n_u)) {
    fail(r.child("basis") + ".half_widths", "needs n_x + n_u = " + std::to_string(n_x + cfg.model.ssm.n_u) + " entries");
  }
  cfg.prior = parse_prior(r.require("prior"), r.child("prior"), n_x);
  cfg.learner = parse_learner(r.require("learner"), r.child("learner"), n_x);
  if (const json* v = r.find("io")) cfg.io = parse_io(*v, r.child("io"));
  r.finish();
  if (cfg.learner.algorithm == Algorithm::Psaem &&
      (cfg.prior.learn_segmentation || !cfg.prior.segmentation.pinned.empty())) {
    fail("$.prior.segmentation", "psaem supports a single segment only");
  }
  return cfg;
}

RunConfig read_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open configuration file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
  return parse_run_config(doc);
}

}  // namespace bfssm::cli
