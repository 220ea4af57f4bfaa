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

#include "uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "error.hpp"
#include "rng.hpp"

namespace spice {

std::string_view to_string(Distribution d) {
  return d == Distribution::NormalizedUniform ? "normalized_uniform" : "normalized_gaussian";
}

Distribution distribution_from_string(std::string_view s) {
  if (s == "normalized_uniform" || s == "uniform") return Distribution::NormalizedUniform;
  if (s == "normalized_gaussian" || s == "gaussian") return Distribution::NormalizedGaussian;
  fail(ErrorKind::Config, "unknown distribution '" + std::string(s) + "'");
}

namespace {

// Breadth-first order of `subset` in its induced subgraph, starting from a
// bus that is farthest from the lowest-numbered member.
std::vector<std::size_t> bfs_order(const Network& net, const std::vector<std::size_t>& subset) {
  std::vector<char> member(net.num_buses(), 0);
  for (std::size_t b : subset) member[b] = 1;

  auto sweep = [&](std::size_t start, std::vector<char>& seen, std::vector<std::size_t>& order) {
    std::deque<std::size_t> queue{start};
    seen[start] = 1;
    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop_front();
      order.push_back(u);
      for (std::size_t v : net.adjacency()[u]) {
        if (member[v] && !seen[v]) {
          seen[v] = 1;
          queue.push_back(v);
        }
      }
    }
  };

  std::vector<char> seen(net.num_buses(), 0);
  std::vector<std::size_t> probe;
  sweep(subset.front(), seen, probe);
  const std::size_t seed = probe.back();  // last visited = maximal BFS level

  std::fill(seen.begin(), seen.end(), 0);
  std::vector<std::size_t> order;
  sweep(seed, seen, order);
  for (std::size_t b : subset) {
    if (!seen[b]) sweep(b, seen, order);
  }
  return order;
}

void bisect(const Network& net, const std::vector<std::size_t>& subset, int k, int first_area,
            std::vector<int>& area_of_load) {
  std::size_t load_count = 0;
  for (std::size_t b : subset) load_count += net.load_at_bus()[b] != Network::npos;

  if (k == 1) {
    for (std::size_t b : subset) {
      const std::size_t l = net.load_at_bus()[b];
      if (l != Network::npos) area_of_load[l] = first_area;
    }
    return;
  }

  const int k1 = k / 2;
  const int k2 = k - k1;
  const auto total = static_cast<double>(load_count);
  auto target = static_cast<std::size_t>(std::llround(total * k1 / k));
  target = std::clamp<std::size_t>(target, static_cast<std::size_t>(k1), load_count - static_cast<std::size_t>(k2));

  const std::vector<std::size_t> order = bfs_order(net, subset);
  std::vector<std::size_t> side1, side2;
  std::size_t taken = 0;
  for (std::size_t b : order) {
    if (taken < target) {
      side1.push_back(b);
      taken += net.load_at_bus()[b] != Network::npos;
    } else {
      side2.push_back(b);
    }
  }
  std::sort(side1.begin(), side1.end());
  std::sort(side2.begin(), side2.end());
  bisect(net, side1, k1, first_area, area_of_load);
  bisect(net, side2, k2, first_area + k1, area_of_load);
}

}  // namespace

std::vector<int> partition_areas(const Network& net, int n) {
  if (n < 1) fail(ErrorKind::Config, "number of areas must be positive");
  if (static_cast<std::size_t>(n) > net.loads.size())
    fail(ErrorKind::Config, "number of areas (" + std::to_string(n) + ") exceeds load count (" +
                                std::to_string(net.loads.size()) + ")");
  std::vector<std::size_t> all(net.num_buses());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  std::vector<int> area_of_load(net.loads.size(), -1);
  bisect(net, all, n, 0, area_of_load);
  return area_of_load;
}

UncertaintyModel make_uncertainty(const Network& net, int n_areas, double epsilon, Distribution dist) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) fail(ErrorKind::Config, "epsilon must be a nonnegative number");
  UncertaintyModel m;
  m.n_areas = n_areas;
  m.area_of_load = partition_areas(net, n_areas);
  m.epsilon = epsilon;
  m.distribution = dist;
  return m;
}

Injections inject(const Network& net, const UncertaintyModel& model, std::span<const double> xi) {
  if (xi.size() != static_cast<std::size_t>(model.n_areas))
    fail(ErrorKind::Config, "xi has length " + std::to_string(xi.size()) + ", expected " +
                                std::to_string(model.n_areas));
  Injections inj;
  const std::size_t n = net.num_buses();
  inj.p.assign(n, 0.0);
  inj.q.assign(n, 0.0);
  inj.load_p.resize(net.loads.size());
  inj.load_q.resize(net.loads.size());

  double deviation = 0.0;
  for (std::size_t l = 0; l < net.loads.size(); ++l) {
    const Load& load = net.loads[l];
    const double scale = model.epsilon * xi[static_cast<std::size_t>(model.area_of_load[l])];
    inj.load_p[l] = load.p_nom * (1.0 + scale);
    inj.load_q[l] = load.q_nom * (1.0 + scale);
    deviation += load.p_nom * scale;
    const std::size_t b = net.bus_index(load.bus);
    inj.p[b] -= inj.load_p[l];
    inj.q[b] -= inj.load_q[l];
  }

  const double share = net.generators.empty() ? 0.0 : deviation / static_cast<double>(net.generators.size());
  inj.gen_p.resize(net.generators.size());
  for (std::size_t g = 0; g < net.generators.size(); ++g) {
    inj.gen_p[g] = net.generators[g].p_nom + share;
    inj.p[net.bus_index(net.generators[g].bus)] += inj.gen_p[g];
  }
  return inj;
}

SampleBatch sample(Distribution dist, int n, std::size_t count, std::uint64_t seed) {
  if (count < 1) fail(ErrorKind::Config, "sample count must be at least 1");
  SampleBatch batch;
  batch.seed = seed;
  batch.distribution = dist;
  batch.samples.resize(static_cast<Eigen::Index>(count), n);
  const double half_width = std::sqrt(3.0);
  for (std::size_t m = 0; m < count; ++m) {
    for (int a = 0; a < n; ++a) {
      const std::uint64_t counter = m * static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(a);
      batch.samples(static_cast<Eigen::Index>(m), a) =
          dist == Distribution::NormalizedUniform ? half_width * (2.0 * rng::uniform01(seed, counter) - 1.0)
                                                  : rng::standard_normal(seed, counter);
    }
  }
  return batch;
}

}  // namespace spice
