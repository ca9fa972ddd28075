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

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "bfssm/errors.hpp"
#include "bfssm/io.hpp"
#include "bfssm/systems.hpp"

namespace bfssm {
namespace {

using systems::SincConvention;

TEST(Sinc, BothConventions) {
  EXPECT_DOUBLE_EQ(systems::sinc(0.0), 1.0);
  EXPECT_DOUBLE_EQ(systems::sinc(0.0, SincConvention::Unnormalized), 1.0);
  EXPECT_NEAR(systems::sinc(0.5), 2.0 / std::numbers::pi, 1e-15);
  EXPECT_NEAR(systems::sinc(1.0), 0.0, 1e-15);
  EXPECT_NEAR(systems::sinc(std::numbers::pi, SincConvention::Unnormalized), 0.0, 1e-15);
  EXPECT_NEAR(systems::sinc(2.0, SincConvention::Unnormalized), std::sin(2.0) / 2.0, 1e-15);
}

TEST(ToySystem, TransitionValues) {
  EXPECT_DOUBLE_EQ(systems::toy_transition(0.0), 10.0);
  EXPECT_NEAR(systems::toy_transition(7.0), 0.0, 1e-13);
  EXPECT_NEAR(systems::toy_transition(3.5), 20.0 / std::numbers::pi, 1e-13);
}

TEST(NarendraLi, HandComputedPoints) {
  const Eigen::Vector2d origin = systems::narendra_li_transition({0.0, 0.0}, 0.0);
  EXPECT_NEAR(origin.norm(), 0.0, 1e-15);
  EXPECT_NEAR(systems::narendra_li_output({0.0, 0.0}), 0.0, 1e-15);

  const Eigen::Vector2d unit = systems::narendra_li_transition({1.0, 0.0}, 0.0);
  EXPECT_NEAR(unit[0], 0.0, 1e-15);
  EXPECT_NEAR(unit[1], std::exp(-0.125), 1e-15);
  EXPECT_NEAR(systems::narendra_li_output({1.0, 0.0}), 1.0, 1e-15);

  // u^3 / (1 + u^2 + 0.5 cos 0) at u = 1.
  const Eigen::Vector2d driven = systems::narendra_li_transition({0.0, 0.0}, 1.0);
  EXPECT_NEAR(driven[1], 0.4, 1e-15);
}

TEST(NarendraLi, TestInputIsTwoSines) {
  for (long long t : {0LL, 3LL, 17LL, 250LL}) {
    const double expected = std::sin(2 * std::numbers::pi * t / 10.0) + std::sin(2 * std::numbers::pi * t / 25.0);
    EXPECT_NEAR(systems::narendra_li_test_input(t), expected, 1e-12) << t;
  }
}

TEST(Generators, ShapesAndNoiseFreeOutput) {
  RngStream rng(5);
  const auto nl = systems::generate_narendra_li(50, rng, 0.0, false);
  ASSERT_EQ(nl.data.size(), 50);
  ASSERT_EQ(nl.states.rows(), 2);
  EXPECT_EQ(nl.data.u.rows(), 1);
  EXPECT_DOUBLE_EQ(nl.states.col(0).norm(), 0.0);
  for (Eigen::Index t = 0; t < 50; ++t) {
    EXPECT_NEAR(nl.data.y(0, t), systems::narendra_li_output(nl.states.col(t)), 1e-14);
    EXPECT_LE(std::abs(nl.data.u(0, t)), 2.5);
    if (t + 1 < 50) {
      const Eigen::Vector2d next = systems::narendra_li_transition(nl.states.col(t), nl.data.u(0, t));
      EXPECT_NEAR((nl.states.col(t + 1) - next).norm(), 0.0, 1e-14);
    }
  }
  const auto toy = systems::generate_toy(30, rng);
  EXPECT_EQ(toy.data.u.rows(), 0);
  EXPECT_EQ(toy.data.y.rows(), 1);
  EXPECT_EQ(toy.states.cols(), 30);
}

TEST(Generators, SeedDeterminesOutput) {
  RngStream a(11), b(11);
  EXPECT_EQ(systems::generate_lgss(40, a).data, systems::generate_lgss(40, b).data);
}

TEST(DatasetCsv, RoundTripIsExact) {
  Dataset d;
  d.t = {1, 2, 3};
  d.u.resize(2, 3);
  d.u << 0.1, -1e-300, 3.0, std::numeric_limits<double>::max(), 1.0 / 3.0, -0.0;
  d.y.resize(1, 3);
  d.y << std::numbers::pi, -2.5e17, 7.0;
  std::stringstream buffer;
  write_dataset(buffer, d);
  EXPECT_EQ(buffer.str().substr(0, buffer.str().find('\n')), "t,u1,u2,y1");
  const Dataset back = parse_dataset(buffer);
  EXPECT_EQ(back, d);
}

TEST(DatasetCsv, MalformedInputRaisesDataError) {
  const char* bad[] = {
      "",
      "u1,y1\n0,1\n",
      "t,y1\n1,2\n2\n",
      "t,y1\n2,1\n1,1\n",
      "t,y1\n1,abc\n",
      "t,u1\n1,2\n",
  };
  for (const char* text : bad) {
    std::istringstream in(text);
    EXPECT_THROW(parse_dataset(in), DataError) << text;
  }
}

TEST(FormatDouble, RoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -2.2250738585072014e-308}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

}  // namespace
}  // namespace bfssm
