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

#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include "admittance.hpp"
#include "uncertainty.hpp"

namespace spice {

struct VoltageState {
  Eigen::VectorXd v_re;
  Eigen::VectorXd v_im;
};

// Boundary conditions for one power flow: PQ buses fix (p, q), PV buses fix
// (p, |V|^2), the slack fixes (v_re, v_im) = (v_set, 0).
struct PfSpec {
  std::shared_ptr<const AdmittanceMatrix> admittance;
  std::vector<BusKind> kind;
  std::vector<double> p;
  std::vector<double> q;
  std::vector<double> v_set;

  std::size_t size() const { return kind.size(); }
};

PfSpec make_pf_spec(const Network& net, std::shared_ptr<const AdmittanceMatrix> y, const Injections& inj);

VoltageState flat_start(const PfSpec& spec);

// Injections implied by a voltage state: S = diag(V) conj(Y V).
struct BusPower {
  Eigen::VectorXd p;
  Eigen::VectorXd q;
};
BusPower bus_power(const AdmittanceMatrix& y, const VoltageState& v);

// 2N mismatch vector, two rows per bus in bus order (see PfSpec).
Eigen::VectorXd residual(const PfSpec& spec, const VoltageState& v);

// d residual / d (v_re_0, v_im_0, v_re_1, v_im_1, ...). The sparsity pattern
// is the 2x2-block adjacency-plus-diagonal pattern regardless of bus kinds.
SparseMatrix jacobian(const PfSpec& spec, const VoltageState& v);

struct PfOptions {
  double tolerance = 1e-8;  // residual infinity norm, per-unit
  int max_iterations = 50;
};

struct PfResult {
  VoltageState state;
  int iterations = 0;
  double mismatch = 0.0;
  bool converged = false;
};

// Newton-Raphson with a step-halving fallback. Reuses the symbolic LU
// analysis across calls, so keep one instance per thread and network.
class PowerFlowSolver {
 public:
  explicit PowerFlowSolver(PfOptions options = {}) : options_(options) {}
  PfResult solve(const PfSpec& spec, const VoltageState& init);

 private:
  PfOptions options_;
  Eigen::SparseLU<SparseMatrix> lu_;
  bool analyzed_ = false;
  Eigen::Index analyzed_size_ = 0;
};

// Throws NonConvergence (with final mismatch and iteration count) or Singular.
PfResult solve_pf(const PfSpec& spec, const VoltageState& init, PfOptions options = {});

}  // namespace spice
