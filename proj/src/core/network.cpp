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

#include "network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <queue>
#include <sstream>

#include "error.hpp"

namespace spice {

std::string_view to_string(BusKind kind) {
  switch (kind) {
    case BusKind::Slack: return "slack";
    case BusKind::PV: return "pv";
    case BusKind::PQ: return "pq";
  }
  return "pq";
}

BusKind bus_kind_from_string(std::string_view s) {
  if (s == "slack") return BusKind::Slack;
  if (s == "pv") return BusKind::PV;
  if (s == "pq") return BusKind::PQ;
  fail(ErrorKind::Parse, "unknown bus kind '" + std::string(s) + "'");
}

std::size_t Network::bus_index(int id) const {
  auto it = index_.find(id);
  if (it == index_.end()) fail(ErrorKind::Validation, "reference to missing bus " + std::to_string(id));
  return it->second;
}

bool Network::operator==(const Network& other) const {
  return buses == other.buses && branches == other.branches && generators == other.generators &&
         loads == other.loads && base_mva == other.base_mva;
}

void Network::finalize() {
  if (!(base_mva > 0.0)) fail(ErrorKind::Validation, "base_mva must be positive");
  if (buses.empty()) fail(ErrorKind::Validation, "network has no buses");

  index_.clear();
  std::size_t slack_count = 0;
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const Bus& b = buses[i];
    if (!index_.emplace(b.id, i).second) fail(ErrorKind::Validation, "duplicate bus id " + std::to_string(b.id));
    if (!(b.v_min > 0.0) || !(b.v_min <= b.v_max))
      fail(ErrorKind::Validation, "bus " + std::to_string(b.id) + ": require 0 < v_min <= v_max");
    if (b.kind == BusKind::Slack) {
      ++slack_count;
      slack_ = i;
    }
  }
  if (slack_count == 0) fail(ErrorKind::Validation, "no slack bus");
  if (slack_count > 1) fail(ErrorKind::Validation, "multiple slack buses");

  const std::size_t n = buses.size();
  adjacency_.assign(n, {});
  for (const Branch& br : branches) {
    const std::size_t f = bus_index(br.from_bus);
    const std::size_t t = bus_index(br.to_bus);
    if (f == t) fail(ErrorKind::Validation, "branch connects bus " + std::to_string(br.from_bus) + " to itself");
    if (!(std::abs(br.series_admittance) > 0.0) || !std::isfinite(std::abs(br.series_admittance)))
      fail(ErrorKind::Validation, "branch " + std::to_string(br.from_bus) + "-" + std::to_string(br.to_bus) +
                                      ": series admittance must be finite and nonzero");
    if (br.s_max < 0.0) fail(ErrorKind::Validation, "branch s_max must be nonnegative");
    if (!(br.tap > 0.0)) fail(ErrorKind::Validation, "branch tap must be positive");
    adjacency_[f].push_back(t);
    adjacency_[t].push_back(f);
  }
  for (auto& adj : adjacency_) {
    std::sort(adj.begin(), adj.end());
    adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
  }

  gens_at_bus_.assign(n, {});
  for (std::size_t g = 0; g < generators.size(); ++g) {
    const Generator& gen = generators[g];
    gens_at_bus_[bus_index(gen.bus)].push_back(g);
    if (gen.p_min > gen.p_max + 1e-9)
      fail(ErrorKind::Validation, "generator at bus " + std::to_string(gen.bus) + ": require p_min <= p_max");
    // Slack-bus dispatch is an output of the power flow, so its setpoint is not range-checked.
    if (buses[bus_index(gen.bus)].kind != BusKind::Slack && (gen.p_min > gen.p_nom + 1e-9 || gen.p_nom > gen.p_max + 1e-9))
      fail(ErrorKind::Validation, "generator at bus " + std::to_string(gen.bus) + ": require p_min <= p_nom <= p_max");
  }
  if (gens_at_bus_[slack_].empty()) fail(ErrorKind::Validation, "slack bus has no generator");
  for (std::size_t i = 0; i < n; ++i) {
    if (buses[i].kind == BusKind::PV && gens_at_bus_[i].empty())
      fail(ErrorKind::Validation, "pv bus " + std::to_string(buses[i].id) + " has no generator");
  }

  load_at_bus_.assign(n, npos);
  for (std::size_t l = 0; l < loads.size(); ++l) {
    const std::size_t b = bus_index(loads[l].bus);
    if (load_at_bus_[b] != npos) fail(ErrorKind::Validation, "more than one load at bus " + std::to_string(loads[l].bus));
    if (!std::isfinite(loads[l].p_nom) || !std::isfinite(loads[l].q_nom))
      fail(ErrorKind::Validation, "load values must be finite");
    load_at_bus_[b] = l;
  }

  // Connectivity
  std::vector<char> seen(n, 0);
  std::queue<std::size_t> frontier;
  frontier.push(0);
  seen[0] = 1;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const std::size_t u = frontier.front();
    frontier.pop();
    for (std::size_t v : adjacency_[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        frontier.push(v);
      }
    }
  }
  if (reached != n) fail(ErrorKind::Validation, "branch graph is not connected");
}

Network make_network(std::vector<Bus> buses, std::vector<Branch> branches, std::vector<Generator> generators,
                     std::vector<Load> loads, double base_mva) {
  Network net;
  net.buses = std::move(buses);
  net.branches = std::move(branches);
  net.generators = std::move(generators);
  net.loads = std::move(loads);
  net.base_mva = base_mva;
  net.finalize();
  return net;
}

namespace {

template <typename T>
T required(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) fail(ErrorKind::Parse, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, std::string("field '") + key + "': " + e.what());
  }
}

template <typename T>
T optional(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

Network network_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorKind::Parse, "network JSON must be an object");
  std::vector<Bus> buses;
  for (const auto& jb : optional<nlohmann::json>(j, "buses", nlohmann::json::array())) {
    Bus b;
    b.id = required<int>(jb, "id");
    b.kind = bus_kind_from_string(required<std::string>(jb, "kind"));
    b.v_min = optional(jb, "v_min", b.v_min);
    b.v_max = optional(jb, "v_max", b.v_max);
    b.nominal_v = optional(jb, "nominal_v", b.nominal_v);
    b.g_shunt = optional(jb, "g_shunt", 0.0);
    b.b_shunt = optional(jb, "b_shunt", 0.0);
    buses.push_back(b);
  }
  std::vector<Branch> branches;
  for (const auto& jb : optional<nlohmann::json>(j, "branches", nlohmann::json::array())) {
    Branch br;
    br.from_bus = required<int>(jb, "from_bus");
    br.to_bus = required<int>(jb, "to_bus");
    const auto y = required<std::vector<double>>(jb, "series_admittance");
    if (y.size() != 2) fail(ErrorKind::Parse, "series_admittance must be [re, im]");
    br.series_admittance = {y[0], y[1]};
    br.charging = optional(jb, "charging", 0.0);
    br.tap = optional(jb, "tap", 1.0);
    br.shift = optional(jb, "shift", 0.0);
    br.s_max = optional(jb, "s_max", 0.0);
    branches.push_back(br);
  }
  std::vector<Generator> gens;
  for (const auto& jg : optional<nlohmann::json>(j, "generators", nlohmann::json::array())) {
    Generator g;
    g.bus = required<int>(jg, "bus");
    g.p_nom = optional(jg, "p_nom", 0.0);
    g.v_nom = optional(jg, "v_nom", 1.0);
    g.p_min = optional(jg, "p_min", g.p_nom);
    g.p_max = optional(jg, "p_max", g.p_nom);
    g.q_min = optional(jg, "q_min", -1e10);
    g.q_max = optional(jg, "q_max", 1e10);
    g.cost = optional(jg, "cost", std::vector<double>{});
    gens.push_back(g);
  }
  std::vector<Load> loads;
  for (const auto& jl : optional<nlohmann::json>(j, "loads", nlohmann::json::array())) {
    Load l;
    l.bus = required<int>(jl, "bus");
    l.p_nom = optional(jl, "p_nom", 0.0);
    l.q_nom = optional(jl, "q_nom", 0.0);
    loads.push_back(l);
  }
  return make_network(std::move(buses), std::move(branches), std::move(gens), std::move(loads),
                      optional(j, "base_mva", 100.0));
}

nlohmann::json network_to_json(const Network& net) {
  nlohmann::json j;
  j["base_mva"] = net.base_mva;
  auto& buses = j["buses"] = nlohmann::json::array();
  for (const Bus& b : net.buses) {
    buses.push_back({{"id", b.id},
                     {"kind", std::string(to_string(b.kind))},
                     {"v_min", b.v_min},
                     {"v_max", b.v_max},
                     {"nominal_v", b.nominal_v},
                     {"g_shunt", b.g_shunt},
                     {"b_shunt", b.b_shunt}});
  }
  auto& branches = j["branches"] = nlohmann::json::array();
  for (const Branch& br : net.branches) {
    branches.push_back({{"from_bus", br.from_bus},
                        {"to_bus", br.to_bus},
                        {"series_admittance", {br.series_admittance.real(), br.series_admittance.imag()}},
                        {"charging", br.charging},
                        {"tap", br.tap},
                        {"shift", br.shift},
                        {"s_max", br.s_max}});
  }
  auto& gens = j["generators"] = nlohmann::json::array();
  for (const Generator& g : net.generators) {
    gens.push_back({{"bus", g.bus},
                    {"p_nom", g.p_nom},
                    {"v_nom", g.v_nom},
                    {"p_min", g.p_min},
                    {"p_max", g.p_max},
                    {"q_min", g.q_min},
                    {"q_max", g.q_max},
                    {"cost", g.cost}});
  }
  auto& loads = j["loads"] = nlohmann::json::array();
  for (const Load& l : net.loads) loads.push_back({{"bus", l.bus}, {"p_nom", l.p_nom}, {"q_nom", l.q_nom}});
  return j;
}

Network parse_case(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorKind::Parse, std::string("network JSON: ") + e.what());
    }
    return network_from_json(j);
  }
  return parse_matpower(text);
}

Network load_case(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open case file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_case(ss.str());
}

std::string network_hash(const Network& net) {
  const std::string canonical = network_to_json(net).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace spice
