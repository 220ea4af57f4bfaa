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
#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace spice {

enum class BusKind { Slack, PV, PQ };

std::string_view to_string(BusKind kind);
BusKind bus_kind_from_string(std::string_view s);

// All quantities are per-unit on Network::base_mva; angles in radians.
struct Bus {
  int id = 0;
  BusKind kind = BusKind::PQ;
  double v_min = 0.9;
  double v_max = 1.1;
  double nominal_v = 1.0;  // voltage setpoint for PV/slack, initial guess otherwise
  double g_shunt = 0.0;
  double b_shunt = 0.0;
  bool operator==(const Bus&) const = default;
};

struct Branch {
  int from_bus = 0;
  int to_bus = 0;
  std::complex<double> series_admittance{0.0, 0.0};
  double charging = 0.0;  // total line charging susceptance
  double tap = 1.0;       // off-nominal turns ratio magnitude, 1 for lines
  double shift = 0.0;     // phase shift, radians
  double s_max = 0.0;     // apparent power limit; 0 means unlimited
  bool operator==(const Branch&) const = default;
};

struct Generator {
  int bus = 0;
  double p_nom = 0.0;
  double v_nom = 1.0;
  double p_min = 0.0;
  double p_max = 0.0;
  double q_min = 0.0;
  double q_max = 0.0;
  // cost(p) = sum_k cost[k] * p^k with p in per-unit
  std::vector<double> cost;
  bool operator==(const Generator&) const = default;
};

struct Load {
  int bus = 0;
  double p_nom = 0.0;
  double q_nom = 0.0;
  bool operator==(const Load&) const = default;
};

// A validated grid case. Construct through make_network() (or the parsers,
// which call it) so the invariants below hold for every instance:
//  - exactly one slack bus,
//  - branch/generator/load endpoints reference existing buses,
//  - the branch graph is connected.
class Network {
 public:
  Network() = default;

  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> generators;
  std::vector<Load> loads;
  double base_mva = 100.0;

  std::size_t num_buses() const { return buses.size(); }
  std::size_t num_branches() const { return branches.size(); }

  // Position of a bus id in `buses`. Throws Validation on unknown ids.
  std::size_t bus_index(int id) const;
  std::size_t slack_index() const { return slack_; }

  // Indices into `generators` for each bus position.
  const std::vector<std::vector<std::size_t>>& generators_at_bus() const { return gens_at_bus_; }
  // Index into `loads` for each bus position, or npos.
  const std::vector<std::size_t>& load_at_bus() const { return load_at_bus_; }

  // Bus positions adjacent through at least one branch (excluding self), sorted.
  const std::vector<std::vector<std::size_t>>& adjacency() const { return adjacency_; }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  bool operator==(const Network& other) const;

  // Re-derive the lookup tables and check invariants. Throws Validation.
  void finalize();

 private:
  std::unordered_map<int, std::size_t> index_;
  std::size_t slack_ = 0;
  std::vector<std::vector<std::size_t>> gens_at_bus_;
  std::vector<std::size_t> load_at_bus_;
  std::vector<std::vector<std::size_t>> adjacency_;
};

Network make_network(std::vector<Bus> buses, std::vector<Branch> branches,
                     std::vector<Generator> generators, std::vector<Load> loads,
                     double base_mva = 100.0);

// MATPOWER version-2 case text (mpc.bus / mpc.branch / mpc.gen / mpc.gencost).
Network parse_matpower(std::string_view text);

// JSON network schema; see README "Network JSON schema".
Network network_from_json(const nlohmann::json& j);
nlohmann::json network_to_json(const Network& net);

// Sniffs the format: JSON if the first non-blank character is '{'.
Network parse_case(std::string_view text);
Network load_case(const std::string& path);

// FNV-1a 64-bit hash of the canonical JSON form, printed as 16 hex digits.
std::string network_hash(const Network& net);

}  // namespace spice
