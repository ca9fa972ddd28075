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

#include "bfssm/io.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "bfssm/errors.hpp"

namespace bfssm {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_number(const std::string& field, std::size_t line) {
  const std::string s = trim(field);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw DataError("csv line " + std::to_string(line) + ": cannot parse '" + s + "' as a number");
  }
  return v;
}

bool is_indexed(const std::string& name, char prefix, int expected) {
  return name == std::string(1, prefix) + std::to_string(expected);
}

}  // namespace

Eigen::Index Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<Eigen::Index>(i);
  }
  return -1;
}

Table parse_table(std::istream& in) {
  Table table;
  std::string line;
  if (!std::getline(in, line)) throw DataError("csv: missing header row");
  for (auto& f : split_fields(line)) table.header.push_back(trim(f));
  if (table.header.empty()) throw DataError("csv: empty header row");
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != table.header.size()) {
      throw DataError("csv line " + std::to_string(line_no) + ": expected " +
                      std::to_string(table.header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_number(f, line_no));
    rows.push_back(std::move(row));
  }
  table.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(table.header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return table;
}

Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "' for reading");
  return parse_table(in);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_table(std::ostream& out, const Table& table) {
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    out << (i ? "," : "") << table.header[i];
  }
  out << '\n';
  for (Eigen::Index r = 0; r < table.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.values.cols(); ++c) {
      out << (c ? "," : "") << format_double(table.values(r, c));
    }
    out << '\n';
  }
}

void write_table(const std::string& path, const Table& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  write_table(out, table);
  if (!out) throw DataError("failed writing '" + path + "'");
}

Dataset parse_dataset(std::istream& in) {
  const Table table = parse_table(in);
  if (table.header.front() != "t") throw DataError("csv: first column must be 't'");
  int n_u = 0;
  int n_y = 0;
  for (std::size_t i = 1; i < table.header.size(); ++i) {
    const auto& name = table.header[i];
    if (n_y == 0 && is_indexed(name, 'u', n_u + 1)) {
      ++n_u;
    } else if (is_indexed(name, 'y', n_y + 1)) {
      ++n_y;
    } else {
      throw DataError("csv: unexpected column '" + name + "' (expected t,u1..,y1..)");
    }
  }
  if (n_y == 0) throw DataError("csv: no output columns");
  Dataset data;
  const Eigen::Index rows = table.values.rows();
  data.u = table.values.middleCols(1, n_u).transpose();
  data.y = table.values.middleCols(1 + n_u, n_y).transpose();
  data.t.reserve(static_cast<std::size_t>(rows));
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double tv = table.values(r, 0);
    const auto ti = static_cast<long long>(tv);
    if (static_cast<double>(ti) != tv) throw DataError("csv: t must be an integer");
    if (!data.t.empty() && ti <= data.t.back()) {
      throw DataError("csv: t must be strictly increasing");
    }
    data.t.push_back(ti);
  }
  return data;
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "' for reading");
  return parse_dataset(in);
}

void write_dataset(std::ostream& out, const Dataset& data) {
  out << 't';
  for (Eigen::Index i = 0; i < data.u.rows(); ++i) out << ",u" << i + 1;
  for (Eigen::Index i = 0; i < data.y.rows(); ++i) out << ",y" << i + 1;
  out << '\n';
  for (Eigen::Index r = 0; r < data.y.cols(); ++r) {
    out << data.t[static_cast<std::size_t>(r)];
    for (Eigen::Index i = 0; i < data.u.rows(); ++i) out << ',' << format_double(data.u(i, r));
    for (Eigen::Index i = 0; i < data.y.rows(); ++i) out << ',' << format_double(data.y(i, r));
    out << '\n';
  }
}

void write_dataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  write_dataset(out, data);
  if (!out) throw DataError("failed writing '" + path + "'");
}

}  // namespace bfssm
