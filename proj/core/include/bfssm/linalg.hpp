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

#include <string_view>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace bfssm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Cholesky factorization that throws CovarianceError naming `what` when the
// matrix is not symmetric positive definite (or contains non-finite values).
Eigen::LLT<MatrixXd> cholesky(const MatrixXd& m, std::string_view what);

// Cholesky that retries once with a 1e-10 * mean(diag) ridge on failure.
// Throws NumericalError if the retry fails as well.
Eigen::LLT<MatrixXd> cholesky_with_jitter(const MatrixXd& m, std::string_view what);

double log_det(const Eigen::LLT<MatrixXd>& llt);

// Inverse of an SPD matrix from its factorization, symmetrized.
MatrixXd spd_inverse(const Eigen::LLT<MatrixXd>& llt);

inline MatrixXd symmetrize(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

// Lower-triangular factor L with L L^T = cov. An exactly-zero covariance is
// accepted and yields a zero factor (degenerate point mass).
MatrixXd covariance_factor(const MatrixXd& cov, std::string_view what);

void require_square(const MatrixXd& m, std::string_view what);

}  // namespace bfssm
