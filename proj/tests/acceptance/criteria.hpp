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

#include <string>

namespace bfssm::acceptance {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome conjugacy_oracle();
Outcome marginal_likelihood_identity();
Outcome gp_approximation();
Outcome pgas_invariance();
Outcome toy_example();
Outcome narendra_li();
Outcome discontinuity_learning();
Outcome property_suites(const char* argv0);

}  // namespace bfssm::acceptance
