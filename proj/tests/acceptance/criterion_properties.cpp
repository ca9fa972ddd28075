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

#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "criteria.hpp"

namespace bfssm::acceptance {

Outcome property_suites(const char* argv0) {
  std::string program = argv0;
  std::string filter = "--gtest_filter=Property*";
  std::string brief = "--gtest_brief=1";
  std::vector<char*> args{program.data(), filter.data(), brief.data()};
  int argc = static_cast<int>(args.size());
  testing::InitGoogleTest(&argc, args.data());
  const int status = RUN_ALL_TESTS();
  const auto* unit = testing::UnitTest::GetInstance();
  return {status == 0 && unit->test_to_run_count() > 0,
          std::to_string(unit->successful_test_count()) + " of " +
              std::to_string(unit->test_to_run_count()) + " property tests passed"};
}

}  // namespace bfssm::acceptance
