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

#include "ccopf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "error.hpp"
#include "uq.hpp"

namespace spice {

namespace {

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

MonitorSelection constraint_monitor() { return MonitorSelection{true, true, false, true}; }

}  // namespace

double ExcessDifferences::max_voltage() const { return std::max(max_abs(v_min), max_abs(v_max)); }
double ExcessDifferences::max_flow() const { return max_abs(s_max); }
double ExcessDifferences::max_p() const { return std::max(max_abs(p_min), max_abs(p_max)); }
double ExcessDifferences::max_q() const { return std::max(max_abs(q_min), max_abs(q_max)); }
double ExcessDifferences::max_all() const { return std::max({max_voltage(), max_flow(), max_p(), max_q()}); }

QuantileSet evaluate_quantiles(const Network& operating_net, const UncertaintyModel& model, double delta,
                               std::size_t samples, std::uint64_t seed, const SpiceConfig& config, int threads) {
  if (!(delta > 0.0 && delta < 0.5)) fail(ErrorKind::Config, "delta must lie in (0, 0.5)");
  const SpiceResult sp = run_spice(operating_net, model, config);
  const SampleBatch batch = sample(model, samples, seed);
  const SampleTable table = evaluate_pce(operating_net, model, sp.coefficients, batch, constraint_monitor(), threads);

  QuantileSet q;
  q.v_low.assign(operating_net.num_buses(), 0.0);
  q.v_high.assign(operating_net.num_buses(), 0.0);
  q.s_high.assign(operating_net.num_branches(), 0.0);
  q.p_low.assign(operating_net.generators.size(), 0.0);
  q.p_high.assign(operating_net.generators.size(), 0.0);
  q.q_low.assign(operating_net.generators.size(), 0.0);
  q.q_high.assign(operating_net.generators.size(), 0.0);
  for (std::size_t c = 0; c < table.quantities.size(); ++c) {
    const QuantityInfo& info = table.quantities[c];
    const auto col = table.values.col(static_cast<Eigen::Index>(c));
    const std::span<const double> v(col.data(), static_cast<std::size_t>(col.size()));
    const std::size_t e = info.element;
    switch (info.cls) {
      case QuantityClass::Voltage:
        q.v_low[e] = lower_quantile(v, delta);
        q.v_high[e] = upper_quantile(v, delta);
        break;
      case QuantityClass::Flow:
        q.s_high[e] = upper_quantile(v, delta);
        break;
      case QuantityClass::GenP:
        q.p_low[e] = lower_quantile(v, delta);
        q.p_high[e] = upper_quantile(v, delta);
        break;
      case QuantityClass::GenQ:
        q.q_low[e] = lower_quantile(v, delta);
        q.q_high[e] = upper_quantile(v, delta);
        break;
      case QuantityClass::Current:
        break;
    }
  }
  return q;
}

ExcessDifferences tighten(EffectiveLimits& limits, const QuantileSet& q, const OpfLimits& original,
                          const Network& net) {
  ExcessDifferences d;
  auto below = [](double quant, double limit) { return std::min(quant - limit, 0.0); };
  auto above = [](double quant, double limit) { return std::max(quant - limit, 0.0); };
  for (std::size_t i = 0; i < net.num_buses(); ++i) {
    d.v_min.push_back(below(q.v_low[i], original.v_min[i]));
    d.v_max.push_back(above(q.v_high[i], original.v_max[i]));
    limits.v_min[i] -= d.v_min[i];
    limits.v_max[i] -= d.v_max[i];
    if (limits.v_min[i] > limits.v_max[i])
      fail(ErrorKind::Infeasible, "effective voltage limits crossed at bus " + std::to_string(net.buses[i].id));
  }
  for (std::size_t l = 0; l < net.num_branches(); ++l) {
    d.s_max.push_back(original.s_max[l] > 0.0 ? above(q.s_high[l], original.s_max[l]) : 0.0);
    limits.s_max[l] -= d.s_max[l];
    if (original.s_max[l] > 0.0 && !(limits.s_max[l] > 0.0))
      fail(ErrorKind::Infeasible, "effective flow limit of branch " + std::to_string(l + 1) + " reached zero");
  }
  for (std::size_t k = 0; k < net.generators.size(); ++k) {
    d.p_min.push_back(below(q.p_low[k], original.p_min[k]));
    d.p_max.push_back(above(q.p_high[k], original.p_max[k]));
    d.q_min.push_back(below(q.q_low[k], original.q_min[k]));
    d.q_max.push_back(above(q.q_high[k], original.q_max[k]));
    limits.p_min[k] -= d.p_min[k];
    limits.p_max[k] -= d.p_max[k];
    limits.q_min[k] -= d.q_min[k];
    limits.q_max[k] -= d.q_max[k];
    if (limits.p_min[k] > limits.p_max[k] || limits.q_min[k] > limits.q_max[k])
      fail(ErrorKind::Infeasible, "effective generation limits crossed at generator " + std::to_string(k + 1));
  }
  return d;
}

ViolationRates validate_operating_point(const Network& operating_net, const UncertaintyModel& model,
                                        const OpfLimits& original, std::size_t samples, std::uint64_t seed,
                                        int threads) {
  const SampleTable table =
      run_monte_carlo(operating_net, model, sample(model, samples, seed), constraint_monitor(), threads);
  ViolationRates rates;
  rates.samples = static_cast<std::size_t>(table.values.rows());
  rates.failures = table.failures;
  constexpr double kSlack = 1e-9;
  for (std::size_t c = 0; c < table.quantities.size(); ++c) {
    const QuantityInfo& info = table.quantities[c];
    double lower = -std::numeric_limits<double>::infinity(), upper = std::numeric_limits<double>::infinity();
    double* rate = nullptr;
    switch (info.cls) {
      case QuantityClass::Voltage:
        lower = original.v_min[info.element];
        upper = original.v_max[info.element];
        rate = &rates.voltage;
        break;
      case QuantityClass::Flow:
        if (original.s_max[info.element] > 0.0) upper = original.s_max[info.element];
        rate = &rates.flow;
        break;
      case QuantityClass::GenP:
        lower = original.p_min[info.element];
        upper = original.p_max[info.element];
        rate = &rates.gen_p;
        break;
      case QuantityClass::GenQ:
        lower = original.q_min[info.element];
        upper = original.q_max[info.element];
        rate = &rates.gen_q;
        break;
      case QuantityClass::Current:
        continue;
    }
    const auto col = table.values.col(static_cast<Eigen::Index>(c));
    const auto violations = (col.array() > upper + kSlack || col.array() < lower - kSlack).count();
    *rate = std::max(*rate, static_cast<double>(violations) / static_cast<double>(std::max<Eigen::Index>(1, col.size())));
  }
  return rates;
}

CcOpfResult solve_cc_opf(const Network& net, const UncertaintyModel& model, const CcOpfConfig& config,
                         const OpfSolver& solver) {
  if (!(config.delta > 0.0 && config.delta < 0.5)) fail(ErrorKind::Config, "delta must lie in (0, 0.5)");
  if (config.max_outer_iterations < 1) fail(ErrorKind::Config, "max_outer_iterations must be positive");
  const OpfLimits original = network_limits(net);
  CcOpfResult res;
  EffectiveLimits limits = original;
  Network operating_net = net;

  for (int it = 1; it <= config.max_outer_iterations; ++it) {
    res.limit_history.push_back(limits);
    res.limits = limits;
    res.operating_point = deterministic_opf(net, limits, solver);
    operating_net = with_operating_point(net, res.operating_point);
    res.final_quantiles = evaluate_quantiles(operating_net, model, config.delta, config.samples, config.seed,
                                             config.spice, config.threads);
    const ExcessDifferences d = tighten(limits, res.final_quantiles, original, net);
    res.iterations.push_back({it, res.operating_point.cost, d.max_voltage(), d.max_flow(), d.max_p(), d.max_q()});
    if (d.max_all() <= config.tolerance) {
      res.converged = true;
      break;
    }
  }
  if (config.validation_samples > 0)
    res.validation = validate_operating_point(operating_net, model, original, config.validation_samples,
                                              config.validation_seed, config.threads);
  return res;
}

namespace {

nlohmann::ordered_json limits_json(const EffectiveLimits& l) {
  return {{"v_min", l.v_min}, {"v_max", l.v_max}, {"s_max", l.s_max}, {"p_min", l.p_min},
          {"p_max", l.p_max}, {"q_min", l.q_min}, {"q_max", l.q_max}};
}

}  // namespace

nlohmann::ordered_json certificate_json(const Network& net, const CcOpfConfig& config, const CcOpfResult& result) {
  const OpfLimits original = network_limits(net);
  nlohmann::ordered_json j;
  j["format"] = "spice-ccopf-certificate 1";
  j["case_hash"] = network_hash(net);
  j["delta"] = config.delta;
  j["samples"] = config.samples;
  j["seed"] = config.seed;
  j["converged"] = result.converged;
  j["outer_iterations"] = result.iterations.size();
  nlohmann::ordered_json its = nlohmann::ordered_json::array();
  for (const CcOpfIteration& it : result.iterations)
    its.push_back({{"iteration", it.iteration},
                   {"cost", it.cost},
                   {"max_excess_voltage", it.dv},
                   {"max_excess_flow", it.ds},
                   {"max_excess_gen_p", it.dp},
                   {"max_excess_gen_q", it.dq}});
  j["iterations"] = its;

  // Smallest distance from a final quantile to its original limit per class
  // (negative when a quantile is outside).
  const QuantileSet& q = result.final_quantiles;
  double mv = std::numeric_limits<double>::infinity(), ms = mv, mp = mv, mq = mv;
  for (std::size_t i = 0; i < net.num_buses(); ++i)
    mv = std::min({mv, q.v_low[i] - original.v_min[i], original.v_max[i] - q.v_high[i]});
  for (std::size_t l = 0; l < net.num_branches(); ++l)
    if (original.s_max[l] > 0.0) ms = std::min(ms, original.s_max[l] - q.s_high[l]);
  for (std::size_t k = 0; k < net.generators.size(); ++k) {
    mp = std::min({mp, q.p_low[k] - original.p_min[k], original.p_max[k] - q.p_high[k]});
    mq = std::min({mq, q.q_low[k] - original.q_min[k], original.q_max[k] - q.q_high[k]});
  }
  auto finite_or_null = [](double x) {
    return std::isfinite(x) ? nlohmann::ordered_json(x) : nlohmann::ordered_json(nullptr);
  };
  j["final_quantile_margins"] = {{"voltage", finite_or_null(mv)},
                                 {"flow", finite_or_null(ms)},
                                 {"gen_p", finite_or_null(mp)},
                                 {"gen_q", finite_or_null(mq)}};
  j["validation"] = {{"samples", result.validation.samples},
                     {"seed", config.validation_seed},
                     {"failures", result.validation.failures},
                     {"violation_voltage", result.validation.voltage},
                     {"violation_flow", result.validation.flow},
                     {"violation_gen_p", result.validation.gen_p},
                     {"violation_gen_q", result.validation.gen_q}};
  j["operating_point"] = {{"cost", result.operating_point.cost},
                          {"p_gen", result.operating_point.p_gen},
                          {"q_gen", result.operating_point.q_gen}};
  j["effective_limits"] = limits_json(result.limits);
  return j;
}

}  // namespace spice
