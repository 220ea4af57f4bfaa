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

#include <cstdint>
#include <vector>

#include "json.hpp"
#include "opf.hpp"
#include "quantities.hpp"
#include "spice_solver.hpp"

namespace spice {

using EffectiveLimits = OpfLimits;

// Lower and upper delta-quantiles of every constrained quantity.
struct QuantileSet {
  std::vector<double> v_low, v_high;  // per bus
  std::vector<double> s_high;         // per branch
  std::vector<double> p_low, p_high;  // per generator
  std::vector<double> q_low, q_high;  // per generator
};

// Excess of the quantiles over the ORIGINAL limits; min-side entries are
// <= 0 and max-side entries >= 0, zero when the quantile is inside.
struct ExcessDifferences {
  std::vector<double> v_min, v_max;
  std::vector<double> s_max;
  std::vector<double> p_min, p_max;
  std::vector<double> q_min, q_max;

  double max_voltage() const;
  double max_flow() const;
  double max_p() const;
  double max_q() const;
  double max_all() const;
};

struct CcOpfConfig {
  double delta = 0.05;
  int max_outer_iterations = 10;
  std::size_t samples = 10000;
  std::uint64_t seed = 1;
  std::size_t validation_samples = 10000;
  std::uint64_t validation_seed = 0x5eed0001;
  double tolerance = 1e-6;
  int threads = 0;
  SpiceConfig spice;
};

// SPICE at the operating point, evaluated over `samples` draws.
QuantileSet evaluate_quantiles(const Network& operating_net, const UncertaintyModel& model, double delta,
                               std::size_t samples, std::uint64_t seed, const SpiceConfig& config, int threads = 0);

// Computes the excess differences against `original` and tightens `limits`
// by them (lower limits move up, upper limits move down). Throws Infeasible
// when a pair of limits crosses.
ExcessDifferences tighten(EffectiveLimits& limits, const QuantileSet& q, const OpfLimits& original,
                          const Network& net);

struct CcOpfIteration {
  int iteration = 0;
  double cost = 0.0;
  double dv = 0.0, ds = 0.0, dp = 0.0, dq = 0.0;  // per-class max |excess|
};

struct ViolationRates {
  double voltage = 0.0, flow = 0.0, gen_p = 0.0, gen_q = 0.0;  // max over constraints in the class
  std::size_t samples = 0;
  std::size_t failures = 0;
};

struct CcOpfResult {
  OpfResult operating_point;
  EffectiveLimits limits;
  std::vector<EffectiveLimits> limit_history;  // limits fed to each OPF
  std::vector<CcOpfIteration> iterations;
  QuantileSet final_quantiles;
  bool converged = false;
  ViolationRates validation;
};

// Empirical per-constraint violation rates of an operating point by Monte-Carlo power flow.
ViolationRates validate_operating_point(const Network& operating_net, const UncertaintyModel& model,
                                        const OpfLimits& original, std::size_t samples, std::uint64_t seed,
                                        int threads = 0);

// Alternates OPF with effective limits and SPICE quantile evaluation until
// all excess differences vanish. Quantiles reuse the same draws in every
// outer iteration. When max_outer_iterations is hit the result carries
// converged = false and the last iterate.
CcOpfResult solve_cc_opf(const Network& net, const UncertaintyModel& model, const CcOpfConfig& config,
                         const OpfSolver& solver = InteriorPointOpf());

nlohmann::ordered_json certificate_json(const Network& net, const CcOpfConfig& config, const CcOpfResult& result);

}  // namespace spice
