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

#include "interior_point.hpp"
#include "power_flow.hpp"

namespace spice {

// Operating limits handed to a deterministic OPF (per-unit).
struct OpfLimits {
  std::vector<double> v_min, v_max;  // per bus
  std::vector<double> s_max;         // per branch, 0 = unlimited
  std::vector<double> p_min, p_max;  // per generator
  std::vector<double> q_min, q_max;  // per generator
};

OpfLimits network_limits(const Network& net);

struct OpfResult {
  VoltageState voltage;
  std::vector<double> p_gen;
  std::vector<double> q_gen;
  double cost = 0.0;
  int iterations = 0;
};

// Any optimizer that minimizes total generation cost subject to the AC power
// flow at nominal load and the given limits.
class OpfSolver {
 public:
  virtual ~OpfSolver() = default;
  virtual OpfResult solve(const Network& net, const OpfLimits& limits) const = 0;
};

// Reference implementation: primal-dual interior point on the rectangular
// formulation x = (v_re, v_im, p_gen, q_gen), with v_im = 0 at the slack.
class InteriorPointOpf : public OpfSolver {
 public:
  explicit InteriorPointOpf(IpmOptions options = {}) : options_(options) {}
  OpfResult solve(const Network& net, const OpfLimits& limits) const override;

 private:
  IpmOptions options_;
};

double generation_cost(const Network& net, const std::vector<double>& p_gen);

// Throws Infeasible when the optimizer ends infeasible, NonConvergence otherwise.
OpfResult deterministic_opf(const Network& net, const OpfLimits& limits, const OpfSolver& solver = InteriorPointOpf());

// Copy of the network with generator setpoints and voltage setpoints of
// PV / slack buses taken from an OPF operating point.
Network with_operating_point(const Network& net, const OpfResult& op);

}  // namespace spice
