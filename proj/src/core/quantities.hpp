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

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "admittance.hpp"
#include "power_flow.hpp"
#include "uncertainty.hpp"

namespace spice {

enum class QuantityClass { Voltage, Flow, Current, GenP, GenQ };

std::string_view to_string(QuantityClass c);
QuantityClass quantity_class_from_string(std::string_view s);

struct MonitorSelection {
  bool voltage = true;    // |V_i| per bus
  bool flow = true;       // |S_f| per branch, from end
  bool current = true;    // |y_s|^2 |V_f / tau - V_t|^2 per branch
  bool generator = true;  // active and reactive output per generator
};

MonitorSelection monitor_from_strings(const std::vector<std::string>& names);

struct QuantityInfo {
  std::string name;
  QuantityClass cls = QuantityClass::Voltage;
  std::size_t element = 0;  // bus, branch or generator position
  BusKind bus_kind = BusKind::PQ;  // voltage quantities only
  double scale = 1.0;       // histogram scale
  double lower = 0.0;       // limits; -inf / +inf when unconstrained
  double upper = 0.0;
};

// The list of monitored quantities of a network and their evaluation from a
// voltage state. Generator outputs are split evenly between the generators of
// a bus on top of their scheduled active power.
class QuantityMap {
 public:
  QuantityMap() = default;
  QuantityMap(const Network& net, MonitorSelection selection);

  std::size_t size() const { return info_.size(); }
  const std::vector<QuantityInfo>& info() const { return info_; }

  // `out` has size(); `inj` are the injections the voltages were solved for.
  void evaluate(const Network& net, const AdmittanceMatrix& y, const Injections& inj, const VoltageState& v,
                std::span<double> out) const;

 private:
  std::vector<QuantityInfo> info_;
};

}  // namespace spice
