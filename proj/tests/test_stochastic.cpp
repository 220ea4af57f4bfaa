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

#include <cmath>
#include <set>

#include "doctest.h"
#include "error.hpp"
#include "oracles.hpp"
#include "uncertainty.hpp"

using namespace spice;

namespace {

// Line graph 1-2-3-4 with a load on every bus.
Network line4() {
  std::vector<Bus> buses(4);
  for (int i = 0; i < 4; ++i) buses[static_cast<std::size_t>(i)].id = i + 1;
  buses[0].kind = BusKind::Slack;
  std::vector<Branch> branches;
  for (int i = 1; i < 4; ++i) {
    Branch br;
    br.from_bus = i;
    br.to_bus = i + 1;
    br.series_admittance = {1.0, -10.0};
    branches.push_back(br);
  }
  Generator g;
  g.bus = 1;
  std::vector<Load> loads;
  for (int i = 1; i <= 4; ++i) loads.push_back({i, 0.1 * i, 0.05 * i});
  return make_network(buses, branches, {g}, loads);
}

}  // namespace

TEST_CASE("30-bus case splits into 9 nonempty areas") {
  const Network net = load_case(oracle::case_path("case30.m"));
  const std::vector<int> areas = partition_areas(net, 9);
  REQUIRE(areas.size() == net.loads.size());
  std::set<int> seen(areas.begin(), areas.end());
  CHECK(seen.size() == 9);
  CHECK(*seen.begin() == 0);
  CHECK(*seen.rbegin() == 8);
  CHECK(partition_areas(net, 9) == areas);
}

TEST_CASE("one area holds every load") {
  const Network net = load_case(oracle::case_path("case118.m"));
  for (int a : partition_areas(net, 1)) CHECK(a == 0);
}

TEST_CASE("bisection of a line graph keeps neighbours together") {
  const Network net = line4();
  const std::vector<int> areas = partition_areas(net, 2);
  CHECK(areas[0] == areas[1]);
  CHECK(areas[2] == areas[3]);
  CHECK(areas[0] != areas[2]);
}

TEST_CASE("more areas than loads is a config error") {
  const Network net = load_case(oracle::case_path("case9.m"));
  CHECK_THROWS_AS(partition_areas(net, 4), Error);
  CHECK_THROWS_AS(partition_areas(net, 0), Error);
}

TEST_CASE("zero draw reproduces the nominal injections") {
  const Network net = load_case(oracle::case_path("case30.m"));
  const UncertaintyModel model = make_uncertainty(net, 4, 0.05, Distribution::NormalizedUniform);
  const std::vector<double> xi(4, 0.0);
  const Injections inj = inject(net, model, xi);
  std::vector<double> p(net.num_buses(), 0.0), q(net.num_buses(), 0.0);
  for (const Load& l : net.loads) {
    p[net.bus_index(l.bus)] -= l.p_nom;
    q[net.bus_index(l.bus)] -= l.q_nom;
  }
  for (const Generator& g : net.generators) p[net.bus_index(g.bus)] += g.p_nom;
  for (std::size_t i = 0; i < net.num_buses(); ++i) {
    CHECK(inj.p[i] == p[i]);
    CHECK(inj.q[i] == q[i]);
  }
}

TEST_CASE("single load scales by one plus epsilon xi at constant power factor") {
  const Network net = oracle::two_bus(1.0, 0.5);
  const UncertaintyModel model = make_uncertainty(net, 1, 0.03, Distribution::NormalizedUniform);
  const std::vector<double> xi{1.0};
  const Injections inj = inject(net, model, xi);
  CHECK(inj.load_p[0] == doctest::Approx(1.03).epsilon(1e-14));
  CHECK(inj.load_q[0] == doctest::Approx(0.515).epsilon(1e-14));
}

TEST_CASE("two generators share a load increase evenly") {
  const Network base = oracle::two_bus(2.0, 0.0);
  std::vector<Generator> gens = base.generators;
  Bus b3;
  b3.id = 3;
  b3.kind = BusKind::PV;
  std::vector<Bus> buses = base.buses;
  buses.push_back(b3);
  std::vector<Branch> branches = base.branches;
  Branch br;
  br.from_bus = 2;
  br.to_bus = 3;
  br.series_admittance = {0.0, -10.0};
  branches.push_back(br);
  Generator g2 = gens[0];
  g2.bus = 3;
  g2.p_nom = 0.5;
  gens.push_back(g2);
  const Network net = make_network(buses, branches, gens, base.loads);
  const UncertaintyModel model = make_uncertainty(net, 1, 0.1, Distribution::NormalizedUniform);
  const std::vector<double> xi{1.0};  // load 2.0 grows by 0.2
  const Injections inj = inject(net, model, xi);
  CHECK(inj.gen_p[0] - net.generators[0].p_nom == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(inj.gen_p[1] - net.generators[1].p_nom == doctest::Approx(0.1).epsilon(1e-14));
}

TEST_CASE("property: inject is affine and recourse balances the load deviation") {
  const Network net = load_case(oracle::case_path("case118.m"));
  oracle::Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = rng.integer(1, 8);
    const UncertaintyModel model = make_uncertainty(net, n, rng.uniform(0.0, 0.1), Distribution::NormalizedUniform);
    std::vector<double> x1(static_cast<std::size_t>(n)), x2(x1.size()), sum(x1.size()), zero(x1.size(), 0.0);
    for (std::size_t a = 0; a < x1.size(); ++a) {
      x1[a] = rng.uniform(-2.0, 2.0);
      x2[a] = rng.uniform(-2.0, 2.0);
      sum[a] = x1[a] + x2[a];
    }
    const Injections i1 = inject(net, model, x1), i2 = inject(net, model, x2), is = inject(net, model, sum),
                     i0 = inject(net, model, zero);
    double err = 0.0;
    for (std::size_t b = 0; b < net.num_buses(); ++b) {
      err = std::max(err, std::abs(i1.p[b] + i2.p[b] - i0.p[b] - is.p[b]));
      err = std::max(err, std::abs(i1.q[b] + i2.q[b] - i0.q[b] - is.q[b]));
    }
    CHECK(err < 1e-12);

    double dgen = 0.0, dload = 0.0;
    for (std::size_t g = 0; g < net.generators.size(); ++g) dgen += i1.gen_p[g] - net.generators[g].p_nom;
    for (std::size_t l = 0; l < net.loads.size(); ++l) dload += i1.load_p[l] - net.loads[l].p_nom;
    CHECK(std::abs(dgen - dload) < 1e-12);
  }
}

TEST_CASE("seeded draws are reproducible and seed-dependent") {
  const SampleBatch a = sample(Distribution::NormalizedUniform, 3, 1000, 42);
  const SampleBatch b = sample(Distribution::NormalizedUniform, 3, 1000, 42);
  const SampleBatch c = sample(Distribution::NormalizedUniform, 3, 1000, 43);
  CHECK(a.samples == b.samples);
  CHECK(a.samples != c.samples);
  CHECK(a.samples.cwiseAbs().maxCoeff() <= std::sqrt(3.0));
}

TEST_CASE("normalized uniform has unit variance") {
  const SampleBatch s = sample(Distribution::NormalizedUniform, 2, 1000000, 9);
  for (Eigen::Index a = 0; a < 2; ++a) {
    const auto col = s.samples.col(a);
    const double mean = col.mean();
    const double var = (col.array() - mean).square().sum() / static_cast<double>(col.size() - 1);
    CHECK(std::abs(mean) < 4.0 * std::sqrt(1.0 / 1e6));
    CHECK(var >= 0.99);
    CHECK(var <= 1.01);
  }
}

TEST_CASE("normalized gaussian has kurtosis three") {
  const std::size_t m = 1000000;
  const SampleBatch s = sample(Distribution::NormalizedGaussian, 2, m, 11);
  for (Eigen::Index a = 0; a < 2; ++a) {
    const auto col = s.samples.col(a);
    const double mean = col.mean();
    const double var = (col.array() - mean).square().mean();
    const double kurt = (col.array() - mean).pow(4).mean() / (var * var);
    CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / static_cast<double>(m)));
    CHECK(std::abs(kurt - 3.0) < 3.0 * std::sqrt(24.0 / static_cast<double>(m)));
  }
}
