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

#include "quantities.hpp"

#include <cmath>
#include <complex>
#include <limits>

#include "error.hpp"

namespace spice {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::string_view to_string(QuantityClass c) {
  switch (c) {
    case QuantityClass::Voltage: return "voltage";
    case QuantityClass::Flow: return "flow";
    case QuantityClass::Current: return "current";
    case QuantityClass::GenP: return "gen_p";
    case QuantityClass::GenQ: return "gen_q";
  }
  return "?";
}

QuantityClass quantity_class_from_string(std::string_view s) {
  for (QuantityClass c : {QuantityClass::Voltage, QuantityClass::Flow, QuantityClass::Current, QuantityClass::GenP,
                          QuantityClass::GenQ})
    if (to_string(c) == s) return c;
  fail(ErrorKind::Parse, "unknown quantity class '" + std::string(s) + "'");
}

MonitorSelection monitor_from_strings(const std::vector<std::string>& names) {
  MonitorSelection m{false, false, false, false};
  for (const std::string& s : names) {
    if (s == "voltage") m.voltage = true;
    else if (s == "flow") m.flow = true;
    else if (s == "current") m.current = true;
    else if (s == "generator") m.generator = true;
    else fail(ErrorKind::Config, "unknown monitor '" + s + "' (expected voltage, flow, current or generator)");
  }
  return m;
}

QuantityMap::QuantityMap(const Network& net, MonitorSelection selection) {
  auto positive_or_one = [](double x) { return x > 0.0 ? x : 1.0; };
  if (selection.voltage) {
    for (std::size_t i = 0; i < net.num_buses(); ++i) {
      const Bus& b = net.buses[i];
      info_.push_back({"vm:" + std::to_string(b.id), QuantityClass::Voltage, i, b.kind,
                       positive_or_one(b.v_max - b.v_min), b.v_min, b.v_max});
    }
  }
  auto branch_name = [&](const char* prefix, std::size_t l) {
    const Branch& br = net.branches[l];
    return std::string(prefix) + std::to_string(l + 1) + ":" + std::to_string(br.from_bus) + "-" +
           std::to_string(br.to_bus);
  };
  if (selection.flow) {
    for (std::size_t l = 0; l < net.num_branches(); ++l) {
      const double s_max = net.branches[l].s_max;
      info_.push_back({branch_name("flow:", l), QuantityClass::Flow, l, BusKind::PQ, positive_or_one(s_max), -kInf,
                       s_max > 0.0 ? s_max : kInf});
    }
  }
  if (selection.current) {
    for (std::size_t l = 0; l < net.num_branches(); ++l) {
      const double s = positive_or_one(net.branches[l].s_max);
      info_.push_back({branch_name("current:", l), QuantityClass::Current, l, BusKind::PQ, s * s, -kInf, kInf});
    }
  }
  if (selection.generator) {
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
      const Generator& gen = net.generators[g];
      const std::string tag = std::to_string(g + 1) + ":" + std::to_string(gen.bus);
      info_.push_back({"gen_p:" + tag, QuantityClass::GenP, g, BusKind::PQ, positive_or_one(gen.p_max - gen.p_min),
                       gen.p_min, gen.p_max});
    }
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
      const Generator& gen = net.generators[g];
      const std::string tag = std::to_string(g + 1) + ":" + std::to_string(gen.bus);
      info_.push_back({"gen_q:" + tag, QuantityClass::GenQ, g, BusKind::PQ, positive_or_one(gen.q_max - gen.q_min),
                       gen.q_min, gen.q_max});
    }
  }
}

void QuantityMap::evaluate(const Network& net, const AdmittanceMatrix& y, const Injections& inj, const VoltageState& v,
                           std::span<double> out) const {
  BusPower s;
  bool have_power = false;
  std::vector<double> sched;
  for (std::size_t q = 0; q < info_.size(); ++q) {
    const QuantityInfo& qi = info_[q];
    const auto e = static_cast<Eigen::Index>(qi.element);
    switch (qi.cls) {
      case QuantityClass::Voltage:
        out[q] = std::hypot(v.v_re(e), v.v_im(e));
        break;
      case QuantityClass::Flow:
      case QuantityClass::Current: {
        const Branch& br = net.branches[qi.element];
        const auto f = static_cast<Eigen::Index>(net.bus_index(br.from_bus));
        const auto t = static_cast<Eigen::Index>(net.bus_index(br.to_bus));
        const std::complex<double> vf(v.v_re(f), v.v_im(f)), vt(v.v_re(t), v.v_im(t));
        if (qi.cls == QuantityClass::Flow) {
          const BranchAdmittance ya = branch_admittance(br);
          out[q] = std::abs(vf * std::conj(ya.yff * vf + ya.yft * vt));
        } else {
          const std::complex<double> w = vf / std::polar(br.tap, br.shift) - vt;
          out[q] = std::norm(br.series_admittance) * std::norm(w);
        }
        break;
      }
      case QuantityClass::GenP:
      case QuantityClass::GenQ: {
        if (!have_power) {
          s = bus_power(y, v);
          have_power = true;
          // Scheduled active generation per bus.
          sched.assign(net.num_buses(), 0.0);
          for (std::size_t g = 0; g < net.generators.size(); ++g)
            sched[net.bus_index(net.generators[g].bus)] += inj.gen_p[g];
        }
        const std::size_t b = net.bus_index(net.generators[qi.element].bus);
        const auto count = static_cast<double>(net.generators_at_bus()[b].size());
        const std::size_t l = net.load_at_bus()[b];
        const double load_p = l == Network::npos ? 0.0 : inj.load_p[l];
        const double load_q = l == Network::npos ? 0.0 : inj.load_q[l];
        const auto bb = static_cast<Eigen::Index>(b);
        if (qi.cls == QuantityClass::GenP)
          out[q] = inj.gen_p[qi.element] + (s.p(bb) + load_p - sched[b]) / count;
        else
          out[q] = (s.q(bb) + load_q) / count;
        break;
      }
    }
  }
}

}  // namespace spice
