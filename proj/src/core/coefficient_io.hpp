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

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "spice_solver.hpp"

namespace spice {

// Sparse text layout, one nonzero coefficient per record:
//
//   spice-coefficients 1
//   case_hash 0123456789abcdef
//   family legendre_normalized
//   dimension 3
//   degree 2
//   ordering graded-lex-desc
//   buses 9 1 2 3 4 5 6 7 8 9
//   records 412
//   v_re 1 0 0 0 1.0400000000000000
//   v_re 5 1 0 0 -0.0012817...
//   ...
//
// A record is: variable, bus id, the n entries of the multi-index, value
// printed with 17 significant digits. Records follow bus order, then variable,
// then the graded ordering of the basis.
struct CoefficientFile {
  std::string case_hash;
  std::vector<int> bus_ids;
  PceCoefficients coefficients;
};

void write_coefficients(std::ostream& out, const CoefficientFile& file);
CoefficientFile read_coefficients(std::istream& in);

void save_coefficients(const std::string& path, const CoefficientFile& file);
CoefficientFile load_coefficients(const std::string& path);

}  // namespace spice
