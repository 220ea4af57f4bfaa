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

#include <Eigen/Dense>

#include "admittance.hpp"

namespace spice {

// min f(x)  s.t.  h(x) = 0,  g(x) <= 0
// Jacobians are stored one constraint per row.
struct NlpPoint {
  double f = 0.0;
  Eigen::VectorXd df;
  Eigen::VectorXd h;
  SparseMatrix dh;
  Eigen::VectorXd g;
  SparseMatrix dg;
};

class NlpProblem {
 public:
  virtual ~NlpProblem() = default;
  virtual Eigen::Index num_variables() const = 0;
  virtual void evaluate(const Eigen::VectorXd& x, NlpPoint& out) const = 0;
  // Hessian of f + lambda' h + mu' g.
  virtual SparseMatrix hessian(const Eigen::VectorXd& x, const Eigen::VectorXd& lambda,
                               const Eigen::VectorXd& mu) const = 0;
};

struct IpmOptions {
  double feasibility_tolerance = 1e-8;
  double gradient_tolerance = 1e-6;
  double complementarity_tolerance = 1e-7;
  double cost_tolerance = 1e-8;
  int max_iterations = 150;
  double sigma = 0.1;        // centering parameter
  double step_ratio = 0.99995;
};

struct IpmResult {
  Eigen::VectorXd x;
  Eigen::VectorXd lambda;
  Eigen::VectorXd mu;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
  double feasibility = 0.0;  // max(|h|_inf, max g), absolute
};

// Primal-dual interior point method with slack variables z: g(x) + z = 0, z > 0.
IpmResult solve_ipm(const NlpProblem& problem, const Eigen::VectorXd& x0, const IpmOptions& options = {});

}  // namespace spice
