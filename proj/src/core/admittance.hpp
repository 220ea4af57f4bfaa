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

#include <complex>

#include <Eigen/SparseCore>

#include "network.hpp"

namespace spice {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

// Real and imaginary parts of the bus admittance matrix, Y = G + jB.
struct AdmittanceMatrix {
  SparseMatrix G;
  SparseMatrix B;
};

// Two-port pi-model entries of one branch: I_f = yff V_f + yft V_t, I_t = ytf V_f + ytt V_t.
struct BranchAdmittance {
  std::complex<double> yff, yft, ytf, ytt;
};

BranchAdmittance branch_admittance(const Branch& br);

AdmittanceMatrix build_admittance(const Network& net);

}  // namespace spice
