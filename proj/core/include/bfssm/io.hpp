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

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bfssm/smc.hpp"

namespace bfssm {

/// Plain numeric CSV: one header row, then one record per line.
struct Table {
  std::vector<std::string> header;
  Eigen::MatrixXd values;  // records x columns

  /// Index of the named column, or -1.
  Eigen::Index column(const std::string& name) const;
};

Table parse_table(std::istream& in);
Table read_table(const std::string& path);
void write_table(std::ostream& out, const Table& table);
void write_table(const std::string& path, const Table& table);

/// Input/output record set with header "t,u1..u{n_u},y1..y{n_y}".
struct Dataset {
  std::vector<long long> t;
  Eigen::MatrixXd u;  // n_u x T
  Eigen::MatrixXd y;  // n_y x T

  Eigen::Index size() const { return y.cols(); }
  ObservedData observed() const { return {u, y}; }
  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.t == b.t && a.u.rows() == b.u.rows() && a.u.cols() == b.u.cols() &&
           a.y.rows() == b.y.rows() && a.y.cols() == b.y.cols() && a.u == b.u && a.y == b.y;
  }
};

/// Throws DataError on malformed content (bad header, ragged rows, non-increasing t).
Dataset parse_dataset(std::istream& in);
Dataset read_dataset(const std::string& path);
void write_dataset(std::ostream& out, const Dataset& data);
/// Throws DataError if the file cannot be written.
void write_dataset(const std::string& path, const Dataset& data);

/// Decimal text with 17 significant digits (round-trips every double).
std::string format_double(double v);

}  // namespace bfssm
