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

#include <array>
#include <memory>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "galerkin.hpp"
#include "power_flow.hpp"

namespace spice {

enum class Variable { VRe = 0, VIm = 1, P = 2, Q = 3 };
inline constexpr std::array<Variable, 4> kAllVariables{Variable::VRe, Variable::VIm, Variable::P, Variable::Q};

std::string_view to_string(Variable v);
Variable variable_from_string(std::string_view s);

// PCE coefficients of every bus variable; row = bus position, column = basis
// index in the graded ordering of the basis.
struct PceCoefficients {
  std::shared_ptr<const PceBasis> basis;
  Eigen::MatrixXd v_re, v_im, p, q;

  Eigen::MatrixXd& operator[](Variable v);
  const Eigen::MatrixXd& operator[](Variable v) const;
  std::size_t num_buses() const { return static_cast<std::size_t>(v_re.rows()); }
};

// Keep/drop flag per (variable, bus, degree-2 index). Lower degrees are always kept.
class SparsityMask {
 public:
  SparsityMask() = default;
  SparsityMask(std::size_t buses, const MultiIndexSet& set);

  bool keep(Variable v, std::size_t bus, std::size_t k) const {
    return k < first_ || keep_[slot(v, bus, k)] != 0;
  }
  void drop(Variable v, std::size_t bus, std::size_t k) { keep_[slot(v, bus, k)] = 0; }

  std::size_t degree2_entries() const { return keep_.size(); }
  std::size_t dropped() const;
  double sparsity() const;

 private:
  std::size_t slot(Variable v, std::size_t bus, std::size_t k) const {
    return (static_cast<std::size_t>(v) * buses_ + bus) * (terms_ - first_) + (k - first_);
  }
  std::size_t buses_ = 0;
  std::size_t terms_ = 0;
  std::size_t first_ = 0;  // first degree-2 index
  std::vector<char> keep_;
};

// Drops degree-2 index e_i + e_j of a variable when
// |X1_i X1_j| < c_off * max_k |X1_k|, X1 being its degree-1 coefficients.
// Rows whose degree-1 coefficients all vanish are dropped whenever c_off > 0.
SparsityMask build_mask(const PceCoefficients& deg1, const MultiIndexSet& set, double c_off);

// Zeroes every masked coefficient.
void apply_mask(const SparsityMask& mask, PceCoefficients& c);

struct SpiceConfig {
  double c_off = 1e-10;
  bool truncate_quartic = true;
  int degree = 2;
  PfOptions pf;
  double gradient_tolerance = 1e-8;
  double decrease_tolerance = 1e-14;
  int max_lm_iterations = 100;
  double lambda0 = 1e-8;
};

struct LeastSquaresReport {
  int iterations = 0;
  int unknowns = 0;
  double objective = 0.0;
  double gradient = 0.0;
  bool converged = false;
  std::vector<double> history;  // objective after each accepted step, starting with the initial value
};

struct SpiceDiagnostics {
  PfResult deterministic;
  NewtonReport degree1;
  LeastSquaresReport degree2;
  std::size_t degree2_entries = 0;
  std::size_t dropped = 0;
  double sparsity = 0.0;
  double consistency = 0.0;  // untruncated, unmasked residual infinity norm
  double injection_scale = 0.0;
  std::size_t full_pairs = 0;
  std::size_t truncated_pairs = 0;
  std::array<double, 4> stage_seconds{};
};

struct SpiceResult {
  PceCoefficients coefficients;
  SparsityMask mask;
  SpiceDiagnostics diagnostics;
};

std::shared_ptr<const PceBasis> make_basis(const UncertaintyModel& model, int degree);

// Coefficients on `basis` from a degree <= 1 Newton solve started at the
// deterministic solution; higher-degree columns are zero.
PceCoefficients solve_degree1(const Network& net, std::shared_ptr<const AdmittanceMatrix> y,
                              const UncertaintyModel& model, std::shared_ptr<const PceBasis> basis,
                              const VoltageState& warm, NewtonReport* report = nullptr);

// Fills p and q from the voltage coefficients: fixed boundary values where the
// bus kind prescribes them, projected powers elsewhere.
void derive_injections(const GalerkinSystem& sys, PceCoefficients& c);

// Levenberg-damped Gauss-Newton on |residual|^2 over the unmasked voltage
// coefficients, starting from `warm` (updated in place).
LeastSquaresReport solve_degree2(const GalerkinSystem& sys, const SparsityMask& mask, bool truncate,
                                 const SpiceConfig& config, CoefficientState& warm);

SpiceResult run_spice(const Network& net, const UncertaintyModel& model, const SpiceConfig& config);

// Square untruncated Galerkin solve of the requested degree (no mask).
PceCoefficients solve_full_pce(const Network& net, const UncertaintyModel& model, int degree,
                               NewtonReport* report = nullptr);

}  // namespace spice
