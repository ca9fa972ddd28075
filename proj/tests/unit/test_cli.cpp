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

#ifdef BFSSM_HAVE_CLI

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "bfssm/cli/commands.hpp"
#include "bfssm/cli/config.hpp"
#include "bfssm/cli/model_file.hpp"
#include "bfssm/errors.hpp"
#include "bfssm/io.hpp"

namespace bfssm::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("bfssm_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
  }

  static std::string slurp(const std::string& file) {
    std::ifstream in(file, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  // Exit status of the bfssm executable run with `args`, output discarded.
  static int exit_code(const std::string& args) {
    const std::string cmd = std::string(BFSSM_CLI_EXE) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static json lgss_config() {
    return json::parse(R"({
      "model": {"n_x": 1, "n_u": 0, "n_y": 1,
                "observation": {"state_gain": [[1.0]], "noise_cov": [[0.1]]}},
      "basis": {"half_widths": [4.0], "functions_per_dim": [6],
                "covariance": {"kind": "se", "s_f": 1.0, "length_scale": 1.0}},
      "prior": {"dof": 1.0, "scale": [[0.1]]},
      "learner": {"algorithm": "gibbs", "iterations": 15, "particles": 8, "discard": 5, "chains": 2}
    })");
  }

  fs::path dir_;
};

std::string config_error(const json& doc) {
  try {
    parse_run_config(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST_F(CliTest, ConfigErrorsNameTheOffendingKey) {
  json doc = lgss_config();
  doc["learner"]["particle"] = 10;
  EXPECT_EQ(config_error(doc), "$.learner.particle: unknown key");

  doc = lgss_config();
  doc["model"]["observation"].erase("noise_cov");
  EXPECT_EQ(config_error(doc), "$.model.observation.noise_cov: required key is missing");

  doc = lgss_config();
  doc["basis"]["half_widths"] = {4.0, 1.0};
  doc["basis"]["functions_per_dim"] = {6, 6};
  EXPECT_NE(config_error(doc).find("$.basis.half_widths"), std::string::npos);

  doc = lgss_config();
  doc["prior"]["scale"] = {{-1.0}};
  EXPECT_EQ(config_error(doc), "$.prior.scale: must be symmetric positive definite");

  doc = lgss_config();
  doc["learner"]["algorithm"] = "psaem";
  doc["prior"]["segmentation"] = {{"learn", true}};
  EXPECT_NE(config_error(doc).find("single segment"), std::string::npos);

  EXPECT_EQ(config_error(lgss_config()), "");
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(exit_code("--help"), 0);
  EXPECT_EQ(exit_code(""), 2);
  EXPECT_EQ(exit_code("generate --system lgss --out " + path("x.csv")), 2);

  ASSERT_EQ(exit_code("generate --system toy --T 30 --seed 1 --out " + path("toy.csv")), 0);
  json bad = lgss_config();
  bad["learner"]["iterations"] = -3;
  write("bad.json", bad.dump());
  EXPECT_EQ(exit_code("learn --config " + path("bad.json") + " --data " + path("toy.csv") + " --out-dir " + path("o")), 2);

  json two_outputs = lgss_config();
  two_outputs["model"]["n_y"] = 2;
  two_outputs["model"]["observation"] = {{"state_gain", {{1.0}, {1.0}}}, {"noise_cov", {{1.0, 0.0}, {0.0, 1.0}}}};
  write("two.json", two_outputs.dump());
  EXPECT_EQ(exit_code("learn --config " + path("two.json") + " --data " + path("toy.csv") + " --out-dir " + path("o")), 3);

  write("ragged.csv", "t,y1\n1,0.5\n2\n");
  EXPECT_EQ(exit_code("evaluate --sim " + path("ragged.csv") + " --truth " + path("toy.csv")), 3);
}

TEST_F(CliTest, GenerateWritesReadableCsv) {
  GenerateOptions g{"narendra-li", 25, 4, path("nl.csv"), 0.1, false, false};
  auto log = spdlog::logger("test");
  generate(g, log);
  const Dataset d = read_dataset(path("nl.csv"));
  EXPECT_EQ(d.size(), 25);
  EXPECT_EQ(d.u.rows(), 1);
  EXPECT_EQ(d.y.rows(), 1);
  generate(g, log);
  EXPECT_EQ(read_dataset(path("nl.csv")), d);
}

TEST_F(CliTest, EvaluateExamples) {
  write("a.csv", "t,y1,y2\n1,0.5,1\n2,-1,2\n3,4,3\n");
  write("b.csv", "t,y1,y2\n1,0.5,3.5\n2,-1,4.5\n3,4,5.5\n");
  write("e.csv", "t,y1\n1,3\n2,4\n");
  write("z.csv", "t,y1\n1,0\n2,0\n");
  write("short.csv", "t,y1,y2\n1,0,0\n");

  EvaluateResult same = evaluate(path("a.csv"), path("a.csv"));
  EXPECT_EQ(same.pooled, 0.0);

  EvaluateResult offset = evaluate(path("b.csv"), path("a.csv"));
  ASSERT_EQ(offset.rmse.size(), 2u);
  EXPECT_EQ(offset.rmse[0].second, 0.0);
  EXPECT_NEAR(offset.rmse[1].second, 2.5, 1e-15);

  EXPECT_NEAR(evaluate(path("e.csv"), path("z.csv")).pooled, std::sqrt(12.5), 1e-15);
  EXPECT_NEAR(evaluate(path("e.csv"), path("z.csv")).pooled, 3.5355, 5e-5);
  EXPECT_THROW(evaluate(path("short.csv"), path("a.csv")), ShapeError);
}

TEST_F(CliTest, LearnIsReproducibleForAFixedSeed) {
  ASSERT_EQ(exit_code("generate --system lgss --T 60 --seed 2 --out " + path("d.csv")), 0);
  write("c.json", lgss_config().dump());
  const std::string common = "learn --config " + path("c.json") + " --data " + path("d.csv") + " --seed 77 --out-dir ";
  ASSERT_EQ(exit_code(common + path("r1")), 0);
  ASSERT_EQ(exit_code(common + path("r2")), 0);
  const std::string first = slurp(path("r1/samples.jsonl"));
  EXPECT_FALSE(first.empty());
  EXPECT_EQ(first, slurp(path("r2/samples.jsonl")));
  EXPECT_EQ(slurp(path("r1/model.json")), slurp(path("r2/model.json")));
  EXPECT_NE(slurp(path("r1/run.log")).find("seed 77"), std::string::npos);

  std::size_t lines = 0;
  std::istringstream in(first);
  for (std::string line; std::getline(in, line); ++lines) {
    const json j = json::parse(line);
    for (const char* key : {"k", "chain", "A", "Q", "xi", "accepted"}) EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(lines, 2u * 16u);
  EXPECT_EQ(read_model_file(path("r1/model.json")).draws(path("r1/model.json"), 1).size(), 2u * 10u);
}

ModelFile linear_model(Algorithm algorithm) {
  ModelFile m;
  m.algorithm = algorithm;
  SsmConfig& c = m.model.ssm;
  c.n_x = 2;
  c.n_u = 1;
  c.n_y = 1;
  c.observation.linear.state_gain = (MatrixXd(1, 2) << 1.0, 2.0).finished();
  c.observation.linear.input_gain = MatrixXd::Zero(1, 1);
  c.observation.noise_cov = MatrixXd::Identity(1, 1);
  c.initial.mean = (VectorXd(2) << 0.5, -1.0).finished();
  c.initial.cov = MatrixXd::Identity(2, 2);
  m.basis.domain.half_widths = {3.0, 3.0, 3.0};
  m.basis.functions_per_dim = {2, 2, 2};
  m.theta = Theta::zeros(1, 2, 8, MatrixXd::Zero(2, 2));
  m.segmentation.dim = 0;
  return m;
}

TEST_F(CliTest, ZeroModelSimulatesTheInitialMeanThenRests) {
  write_model_file(path("m.json"), linear_model(Algorithm::Psaem));
  write("u.csv", "t,u1\n1,0.3\n2,-2\n3,1\n4,0\n");
  auto log = spdlog::logger("test");
  simulate(SimulateOptions{path("m.json"), path("u.csv"), path("s.csv"), 1, false, std::nullopt}, log);
  const Table s = read_table(path("s.csv"));
  ASSERT_EQ(s.header, (std::vector<std::string>{"t", "y1"}));
  EXPECT_EQ(s.values(0, 1), -1.5);
  for (Eigen::Index t = 1; t < 4; ++t) EXPECT_EQ(s.values(t, 1), 0.0);
}

TEST_F(CliTest, SimulatedLinearModelEvaluatesToZeroAgainstItself) {
  ModelFile m = linear_model(Algorithm::Psaem);
  m.model.offset = OffsetKind::Fixed;
  m.model.ssm.known_offset = LinearMap{(MatrixXd(2, 2) << 0.5, 0.1, 0.0, 0.3).finished(),
                                       (MatrixXd(2, 1) << 1.0, 0.0).finished()};
  write_model_file(path("m.json"), m);
  write("u.csv", "t,u1\n1,1\n2,0.5\n3,-1\n");
  auto log = spdlog::logger("test");
  simulate(SimulateOptions{path("m.json"), path("u.csv"), path("s.csv"), 1, false, std::nullopt}, log);
  const Table s = read_table(path("s.csv"));
  // x2 = F m + G u1, y2 = C x2.
  EXPECT_NEAR(s.values(1, 1), 1.0 * (0.25 - 0.1 + 1.0) + 2.0 * (-0.3), 1e-14);
  EXPECT_EQ(evaluate(path("s.csv"), path("s.csv")).pooled, 0.0);
}

TEST_F(CliTest, PointEstimateGridHasDegenerateBands) {
  ModelFile m = linear_model(Algorithm::Psaem);
  m.theta.segments[0].A << 1, 2, 3, 4, 5, 6, 7, 8, -1, 0, 1, 0, 1, 0, 1, 0;
  write_model_file(path("m.json"), m);
  auto log = spdlog::logger("test");
  fgrid(FgridOptions{path("m.json"), {0, 2}, {-1, -2}, {1, 2}, {3, 4}, {}, path("g.csv"), 1}, log);
  const Table g = read_table(path("g.csv"));
  ASSERT_EQ(g.values.rows(), 12);
  ASSERT_EQ(g.header.front(), "z1");
  ASSERT_EQ(g.header[1], "z3");
  for (Eigen::Index r = 0; r < g.values.rows(); ++r) {
    for (int i = 0; i < 2; ++i) {
      const Eigen::Index f = g.column("f" + std::to_string(i + 1));
      EXPECT_EQ(g.values(r, f), g.values(r, f + 1));
      EXPECT_EQ(g.values(r, f), g.values(r, f + 2));
    }
  }
  EXPECT_THROW(fgrid(FgridOptions{path("m.json"), {5}, {0}, {1}, {2}, {}, path("g.csv"), 1}, log), ParameterError);
}

TEST_F(CliTest, ModelFileRoundTrip) {
  ModelFile m = linear_model(Algorithm::Gibbs);
  m.theta.segments[0].A.setConstant(0.1 / 3.0);
  m.theta.segments[0].Q << 0.2, 0.05, 0.05, 0.3;
  m.basis.covariance = CovarianceFunction::matern(2.0, 0.7, 2.5);
  m.samples = "samples.jsonl";
  m.discard = 4;
  m.seed = 18446744073709551615ull;
  write_model_file(path("m.json"), m);
  const ModelFile back = read_model_file(path("m.json"));
  EXPECT_EQ(back.algorithm, Algorithm::Gibbs);
  EXPECT_EQ(back.theta.segments[0].A, m.theta.segments[0].A);
  EXPECT_EQ(back.theta.segments[0].Q, m.theta.segments[0].Q);
  EXPECT_EQ(back.seed, m.seed);
  EXPECT_EQ(back.discard, 4u);
  ASSERT_TRUE(back.basis.covariance);
  EXPECT_EQ(back.basis.covariance->nu, 2.5);
  EXPECT_EQ(back.model.ssm.initial.mean, m.model.ssm.initial.mean);
}

}  // namespace
}  // namespace bfssm::cli

#endif  // BFSSM_HAVE_CLI
