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

#include "bfssm/linalg.hpp"

#include <string>

#include "bfssm/errors.hpp"

namespace bfssm {

void require_square(const MatrixXd& m, std::string_view what) {
  if (m.rows() != m.cols()) {
    throw ShapeError(std::string(what) + ": expected a square matrix, got " +
                     std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

Eigen::LLT<MatrixXd> cholesky(const MatrixXd& m, std::string_view what) {
  require_square(m, what);
  if (!m.allFinite()) {
    throw CovarianceError(std::string(what) + ": non-finite entries");
  }
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw CovarianceError(std::string(what) + ": not positive definite");
  }
  return llt;
}

Eigen::LLT<MatrixXd> cholesky_with_jitter(const MatrixXd& m, std::string_view what) {
  require_square(m, what);
  if (!m.allFinite()) {
    throw NumericalError(std::string(what) + ": non-finite entries");
  }
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() == Eigen::Success) return llt;
  const double scale = m.diagonal().cwiseAbs().mean();
  MatrixXd ridged = m;
  ridged.diagonal().array() += 1e-10 * (scale > 0.0 ? scale : 1.0);
  llt.compute(ridged);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(std::string(what) + ": lost positive definiteness");
  }
  return llt;
}

double log_det(const Eigen::LLT<MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

MatrixXd spd_inverse(const Eigen::LLT<MatrixXd>& llt) {
  const auto n = llt.matrixLLT().rows();
  return symmetrize(llt.solve(MatrixXd::Identity(n, n)));
}

MatrixXd covariance_factor(const MatrixXd& cov, std::string_view what) {
  require_square(cov, what);
  if (cov.isZero(0.0)) return MatrixXd::Zero(cov.rows(), cov.cols());
  return cholesky(cov, what).matrixL();
}

}  // namespace bfssm
