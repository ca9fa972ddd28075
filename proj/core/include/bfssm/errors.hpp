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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bfssm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Matrix or vector dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be symmetric positive definite is not.
class CovarianceError : public Error {
 public:
  using Error::Error;
};

/// Distribution parameters outside their support (e.g. too few degrees of freedom).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Categorical weights that are negative, NaN or all zero.
class WeightError : public Error {
 public:
  using Error::Error;
};

/// Posterior quantities lost positive definiteness beyond jitter tolerance.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// All particle weights vanished at time step `time` (0-based).
class DegeneracyError : public NumericalError {
 public:
  DegeneracyError(std::size_t time, const std::string& what)
      : NumericalError(what), time_(time) {}
  std::size_t time() const noexcept { return time_; }

 private:
  std::size_t time_;
};

/// A propagated particle became NaN or infinite.
class PropagationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace bfssm
