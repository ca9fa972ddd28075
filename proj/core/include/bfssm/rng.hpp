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
#include <random>

namespace bfssm {

// Reproducible random stream identified by (seed, stream id). Two streams with
// the same identity produce identical draw sequences; streams that differ in
// either field are statistically independent for all practical purposes.
//
// A stream is a value type. Copying it forks the state, which is how replay
// tests resume a chain from a stored point. Do not share one instance across
// threads.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  /// Uniform on [0, 1).
  double uniform();
  /// Standard normal.
  double normal();
  /// Gamma with unit scale.
  double gamma(double shape);
  double chi_squared(double dof);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

}  // namespace bfssm
