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
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "admittance.hpp"
#include "pce_basis.hpp"
#include "uncertainty.hpp"

namespace spice {

// Voltage coefficients, one row per bus and one column per basis index.
struct CoefficientState {
  Eigen::MatrixXd v_re;
  Eigen::MatrixXd v_im;
};

// Power flow projected onto a PCE basis. Every bus contributes two
// equations per basis index k:
//   PQ:    P_{i,k}(V) = p_{i,k},        Q_{i,k}(V) = q_{i,k}
//   PV:    P_{i,k}(V) = p_{i,k},        (|V_i|^2)_k = v_set^2 [k == 0]
//   slack: v_re_{i,k} = v_set [k == 0], v_im_{i,k} = 0
// with P_{i,k} = sum_{k1,k2} <Psi_k1 Psi_k2, Psi_k> (e_{i,k1} Ire_{i,k2} + f_{i,k1} Iim_{i,k2}).
// Unknowns and equations are both indexed as (i * K + k) * 2 + c.
class GalerkinSystem {
 public:
  GalerkinSystem(std::shared_ptr<const AdmittanceMatrix> y, std::vector<BusKind> kind, std::vector<double> v_set,
                 std::shared_ptr<const PceBasis> basis, Eigen::MatrixXd p, Eigen::MatrixXd q);

  std::size_t num_buses() const { return kind_.size(); }
  std::size_t num_terms() const { return basis_->size(); }
  Eigen::Index size() const { return static_cast<Eigen::Index>(2 * num_buses() * num_terms()); }
  Eigen::Index index(std::size_t bus, std::size_t k, int c) const {
    return static_cast<Eigen::Index>((bus * num_terms() + k) * 2 + static_cast<std::size_t>(c));
  }

  const PceBasis& basis() const { return *basis_; }
  std::shared_ptr<const PceBasis> basis_ptr() const { return basis_; }
  const AdmittanceMatrix& admittance() const { return *y_; }
  const std::vector<BusKind>& kind() const { return kind_; }
  const std::vector<double>& v_set() const { return v_set_; }
  const Eigen::MatrixXd& p() const { return p_; }
  const Eigen::MatrixXd& q() const { return q_; }

  // Products whose two factors both have total degree 2 are dropped when truncated.
  const TripleTensor& tensor(bool truncate) const { return truncate ? truncated_ : basis_->triple(); }

  Eigen::VectorXd pack(const CoefficientState& s) const;
  CoefficientState unpack(const Eigen::VectorXd& x) const;

  // Projected injections P_{i,k}, Q_{i,k} implied by the voltage coefficients.
  void project_power(const CoefficientState& s, bool truncate, Eigen::MatrixXd& p, Eigen::MatrixXd& q) const;

  Eigen::VectorXd residual(const CoefficientState& s, bool truncate) const;

  // Jacobian restricted to the columns with column_map[c] >= 0 (renumbered to
  // column_map[c]); an empty map keeps every column. The sparsity pattern
  // depends only on the network, the tensor and the map, never on values.
  SparseMatrix jacobian(const CoefficientState& s, bool truncate, std::span<const Eigen::Index> column_map = {},
                        Eigen::Index columns = -1) const;

 private:
  std::shared_ptr<const AdmittanceMatrix> y_;
  Eigen::SparseMatrix<double, Eigen::RowMajor> g_rows_, b_rows_;
  std::vector<BusKind> kind_;
  std::vector<double> v_set_;
  std::shared_ptr<const PceBasis> basis_;
  Eigen::MatrixXd p_, q_;
  TripleTensor truncated_;
};

// Injection coefficients of the area-wise load model with uniform recourse,
// projected on `basis` (affine in xi, so only degree <= 1 entries are nonzero).
void overload_injections(const Network& net, const UncertaintyModel& model, const PceBasis& basis,
                         Eigen::MatrixXd& p, Eigen::MatrixXd& q);

GalerkinSystem make_galerkin_system(const Network& net, std::shared_ptr<const AdmittanceMatrix> y,
                                    const UncertaintyModel& model, std::shared_ptr<const PceBasis> basis);

// (k1, k2) pairs per projected equation: K^2 in full, K^2 - K2^2 truncated,
// K2 being the number of degree-2 indices.
std::size_t full_pair_count(const MultiIndexSet& set);
std::size_t truncated_pair_count(const MultiIndexSet& set);

struct NewtonReport {
  int iterations = 0;
  double mismatch = 0.0;
};

// Newton iteration on the square, untruncated system; residual infinity norm <= tolerance.
// Throws NonConvergence or Singular.
NewtonReport solve_galerkin_newton(const GalerkinSystem& sys, CoefficientState& state, double tolerance = 1e-8,
                                   int max_iterations = 50);

}  // namespace spice
