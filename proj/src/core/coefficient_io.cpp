// Copyright 2026 The spice-pce Authors.
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

#include "coefficient_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "error.hpp"

namespace spice {

namespace {

constexpr const char* kOrdering = "graded-lex-desc";

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_coefficients(std::ostream& out, const CoefficientFile& file) {
  const PceCoefficients& c = file.coefficients;
  const PceBasis& basis = *c.basis;
  const MultiIndexSet& set = basis.index_set();
  if (file.bus_ids.size() != c.num_buses()) fail(ErrorKind::Config, "bus id list does not match coefficient rows");

  std::size_t records = 0;
  for (Variable v : kAllVariables) records += static_cast<std::size_t>((c[v].array() != 0.0).count());

  out << "spice-coefficients 1\n";
  out << "case_hash " << file.case_hash << "\n";
  out << "family " << to_string(basis.family()) << "\n";
  out << "dimension " << set.dimension() << "\n";
  out << "degree " << set.degree() << "\n";
  out << "ordering " << kOrdering << "\n";
  out << "buses " << file.bus_ids.size();
  for (int id : file.bus_ids) out << ' ' << id;
  out << "\nrecords " << records << "\n";
  for (std::size_t i = 0; i < c.num_buses(); ++i) {
    for (Variable v : kAllVariables) {
      for (std::size_t k = 0; k < set.size(); ++k) {
        const double value = c[v](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
        if (value == 0.0) continue;
        out << to_string(v) << ' ' << file.bus_ids[i];
        for (int a : set[k]) out << ' ' << a;
        out << ' ' << format_double(value) << '\n';
      }
    }
  }
}

CoefficientFile read_coefficients(std::istream& in) {
  int line_no = 0;
  std::string line;
  auto next = [&](const char* key) {
    if (!std::getline(in, line)) fail(ErrorKind::Parse, std::string("coefficient file ends before '") + key + "'");
    ++line_no;
    std::istringstream ss(line);
    std::string k;
    ss >> k;
    if (k != key)
      fail(ErrorKind::Parse, "coefficient file line " + std::to_string(line_no) + ": expected '" + key + "'");
    return std::istringstream(line.substr(k.size()));
  };
  auto bad = [&](const std::string& what) {
    fail(ErrorKind::Parse, "coefficient file line " + std::to_string(line_no) + ": " + what);
  };

  int version = 0;
  if (!(next("spice-coefficients") >> version) || version != 1) bad("unsupported version");
  CoefficientFile file;
  next("case_hash") >> file.case_hash;
  std::string family;
  next("family") >> family;
  int n = 0, deg = 0;
  if (!(next("dimension") >> n) || n < 1) bad("invalid dimension");
  if (!(next("degree") >> deg) || deg < 0 || deg > 2) bad("invalid degree");
  std::string ordering;
  next("ordering") >> ordering;
  if (ordering != kOrdering) bad("unsupported ordering '" + ordering + "'");
  std::size_t buses = 0;
  auto bus_line = next("buses");
  if (!(bus_line >> buses)) bad("invalid bus count");
  file.bus_ids.resize(buses);
  std::unordered_map<int, std::size_t> bus_pos;
  for (std::size_t i = 0; i < buses; ++i) {
    if (!(bus_line >> file.bus_ids[i])) bad("missing bus id");
    bus_pos.emplace(file.bus_ids[i], i);
  }
  std::size_t records = 0;
  if (!(next("records") >> records)) bad("invalid record count");

  auto basis = std::make_shared<const PceBasis>(MultiIndexSet(n, deg), family_from_string(family));
  const auto rows = static_cast<Eigen::Index>(buses);
  const auto cols = static_cast<Eigen::Index>(basis->size());
  PceCoefficients& c = file.coefficients;
  c.basis = basis;
  for (Variable v : kAllVariables) c[v] = Eigen::MatrixXd::Zero(rows, cols);

  MultiIndex alpha(static_cast<std::size_t>(n));
  for (std::size_t r = 0; r < records; ++r) {
    if (!std::getline(in, line)) bad("expected " + std::to_string(records) + " records");
    ++line_no;
    std::istringstream ss(line);
    std::string var;
    int bus = 0;
    double value = 0.0;
    if (!(ss >> var >> bus)) bad("malformed record");
    for (int& a : alpha)
      if (!(ss >> a)) bad("malformed multi-index");
    if (!(ss >> value)) bad("malformed value");
    const auto bp = bus_pos.find(bus);
    if (bp == bus_pos.end()) bad("unknown bus " + std::to_string(bus));
    const std::size_t k = basis->index_set().find(alpha);
    if (k == MultiIndexSet::npos) bad("multi-index outside the basis");
    c[variable_from_string(var)](static_cast<Eigen::Index>(bp->second), static_cast<Eigen::Index>(k)) = value;
  }
  return file;
}

void save_coefficients(const std::string& path, const CoefficientFile& file) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  write_coefficients(out, file);
  if (!out) fail(ErrorKind::Io, "failed writing " + path);
}

CoefficientFile load_coefficients(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot read " + path);
  return read_coefficients(in);
}

}  // namespace spice
