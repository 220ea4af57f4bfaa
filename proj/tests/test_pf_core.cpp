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

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "admittance.hpp"
#include "doctest.h"
#include "error.hpp"
#include "oracles.hpp"
#include "power_flow.hpp"
#include "uncertainty.hpp"

using namespace spice;

namespace {

struct Fixture {
  Network net;
  std::shared_ptr<const AdmittanceMatrix> y;
  PfSpec spec;
};

Fixture nominal(Network net) {
  Fixture f;
  f.net = std::move(net);
  f.y = std::make_shared<AdmittanceMatrix>(build_admittance(f.net));
  const UncertaintyModel model = make_uncertainty(f.net, 1, 0.0, Distribution::NormalizedUniform);
  const std::vector<double> xi{0.0};
  f.spec = make_pf_spec(f.net, f.y, inject(f.net, model, xi));
  return f;
}

VoltageState random_state(std::size_t n, oracle::Rng& rng) {
  VoltageState v;
  v.v_re.resize(static_cast<Eigen::Index>(n));
  v.v_im.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double mag = rng.uniform(0.85, 1.15), ang = rng.uniform(-0.6, 0.6);
    v.v_re(static_cast<Eigen::Index>(i)) = mag * std::cos(ang);
    v.v_im(static_cast<Eigen::Index>(i)) = mag * std::sin(ang);
  }
  return v;
}

std::vector<oracle::cplx> to_complex(const VoltageState& v) {
  std::vector<oracle::cplx> out(static_cast<std::size_t>(v.v_re.size()));
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = {v.v_re(static_cast<Eigen::Index>(i)), v.v_im(static_cast<Eigen::Index>(i))};
  return out;
}

// Lossless network without injections: every bus at 1 pu is a solution.
Network zero_injection() {
  std::vector<Bus> buses(3);
  for (int i = 0; i < 3; ++i) buses[static_cast<std::size_t>(i)].id = i + 1;
  buses[0].kind = BusKind::Slack;
  std::vector<Branch> branches;
  for (auto [a, b] : {std::pair{1, 2}, std::pair{2, 3}, std::pair{1, 3}}) {
    Branch br;
    br.from_bus = a;
    br.to_bus = b;
    br.series_admittance = {0.0, -5.0};
    branches.push_back(br);
  }
  Generator g;
  g.bus = 1;
  return make_network(buses, branches, {g}, {Load{2, 0.0, 0.0}});
}

}  // namespace

TEST_CASE("flat start solves a lossless zero-injection network") {
  const Fixture f = nominal(zero_injection());
  const VoltageState v0 = flat_start(f.spec);
  CHECK(residual(f.spec, v0).cwiseAbs().maxCoeff() == 0.0);
  const PfResult r = solve_pf(f.spec, v0);
  CHECK(r.converged);
  CHECK(r.iterations <= 2);
  CHECK((r.state.v_re.array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("two-bus case matches the closed-form solution") {
  for (auto [p, q] : {std::pair{0.1, 0.0}, std::pair{1.0, 0.3}, std::pair{2.0, -0.2}}) {
    const Fixture f = nominal(oracle::two_bus(p, q));
    const oracle::cplx v2 = oracle::two_bus_voltage(p, q);
    VoltageState exact;
    exact.v_re = Eigen::Vector2d(1.0, v2.real());
    exact.v_im = Eigen::Vector2d(0.0, v2.imag());
    CHECK(residual(f.spec, exact).cwiseAbs().maxCoeff() < 1e-12);
    const PfResult r = solve_pf(f.spec, flat_start(f.spec));
    CHECK(std::abs(r.state.v_re(1) - v2.real()) < 1e-8);
    CHECK(std::abs(r.state.v_im(1) - v2.imag()) < 1e-8);
  }
}

TEST_CASE("load beyond the nose point fails to converge") {
  const Fixture f = nominal(oracle::two_bus(6.0, 0.0));  // loadability limit is 5 pu
  try {
    solve_pf(f.spec, flat_start(f.spec));
    FAIL("expected non-convergence");
  } catch (const Error& e) {
    CHECK((e.kind() == ErrorKind::NonConvergence || e.kind() == ErrorKind::Singular));
  }
}

TEST_CASE("property: rectangular injections equal the complex oracle on random states") {
  for (const char* name : {"case9.m", "case30.m", "case118.m"}) {
    const Network net = load_case(oracle::case_path(name));
    const AdmittanceMatrix y = build_admittance(net);
    const auto yc = oracle::ybus(net);
    oracle::Rng rng(1234);
    for (int trial = 0; trial < 100; ++trial) {
      const VoltageState v = random_state(net.num_buses(), rng);
      const BusPower s = bus_power(y, v);
      const auto ref = oracle::power(yc, to_complex(v));
      for (std::size_t i = 0; i < net.num_buses(); ++i) {
        const double tol = 1e-12 * std::max(1.0, std::abs(ref[i]));
        CHECK(std::abs(s.p(static_cast<Eigen::Index>(i)) - ref[i].real()) <= tol);
        CHECK(std::abs(s.q(static_cast<Eigen::Index>(i)) - ref[i].imag()) <= tol);
      }
    }
  }
}

TEST_CASE("Jacobian matches central differences on random states") {
  for (const char* name : {"case9.m", "case30.m"}) {
    const Fixture f = nominal(load_case(oracle::case_path(name)));
    oracle::Rng rng(99);
    for (int trial = 0; trial < 5; ++trial) {
      VoltageState v = random_state(f.net.num_buses(), rng);
      const Eigen::MatrixXd j(jacobian(f.spec, v));
      const Eigen::Index n = v.v_re.size();
      Eigen::MatrixXd fd(2 * n, 2 * n);
      const double h = 1e-6;
      for (Eigen::Index c = 0; c < 2 * n; ++c) {
        VoltageState plus = v, minus = v;
        Eigen::VectorXd& vp = c % 2 ? plus.v_im : plus.v_re;
        Eigen::VectorXd& vm = c % 2 ? minus.v_im : minus.v_re;
        vp(c / 2) += h;
        vm(c / 2) -= h;
        fd.col(c) = (residual(f.spec, plus) - residual(f.spec, minus)) / (2.0 * h);
      }
      CHECK((fd - j).cwiseAbs().maxCoeff() / j.cwiseAbs().maxCoeff() <= 1e-6);
    }
  }
}

TEST_CASE("slack rows are identity rows and the pattern is block adjacency") {
  const Fixture f = nominal(load_case(oracle::case_path("case30.m")));
  oracle::Rng rng(5);
  const VoltageState v = random_state(f.net.num_buses(), rng);
  const Eigen::MatrixXd j(jacobian(f.spec, v));
  const auto s = static_cast<Eigen::Index>(f.net.slack_index());
  for (int c = 0; c < 2; ++c) {
    const Eigen::VectorXd row = j.row(2 * s + c);
    CHECK(row(2 * s + c) == 1.0);
    CHECK(row.cwiseAbs().sum() == 1.0);
  }
  const SparseMatrix js = jacobian(f.spec, v);
  for (int k = 0; k < js.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(js, k); it; ++it) {
      const auto bi = static_cast<std::size_t>(it.row() / 2), bj = static_cast<std::size_t>(it.col() / 2);
      const auto& adj = f.net.adjacency()[bi];
      CHECK((bi == bj || std::find(adj.begin(), adj.end(), bj) != adj.end()));
    }
  // Every diagonal and adjacent 2x2 block is present structurally.
  std::size_t expected = 0;
  for (std::size_t i = 0; i < f.net.num_buses(); ++i) expected += 4 * (1 + f.net.adjacency()[i].size());
  CHECK(static_cast<std::size_t>(js.nonZeros()) == expected);
}

TEST_CASE("case9 converges to the published operating point") {
  const Fixture f = nominal(load_case(oracle::case_path("case9.m")));
  const PfResult r = solve_pf(f.spec, flat_start(f.spec));
  const double vm[] = {1.0, 1.0, 1.0, 0.987, 0.975, 1.003, 0.986, 0.996, 0.958};
  const double va_deg[] = {0.0, 9.669, 4.771, -2.407, -4.017, 1.926, 0.622, 3.799, -4.350};
  for (Eigen::Index i = 0; i < 9; ++i) {
    const oracle::cplx v(r.state.v_re(i), r.state.v_im(i));
    CHECK(std::abs(std::abs(v) - vm[i]) < 6e-4);
    CHECK(std::abs(std::arg(v) * 180.0 / std::numbers::pi - va_deg[i]) < 1e-3);
  }
}

TEST_CASE("power balance: net injection equals branch and shunt losses") {
  for (const char* name : {"case9.m", "case30.m", "case118.m"}) {
    const Fixture f = nominal(load_case(oracle::case_path(name)));
    const PfResult r = solve_pf(f.spec, flat_start(f.spec));
    const auto v = to_complex(r.state);
    double losses = 0.0;
    for (const Branch& br : f.net.branches) {
      const std::size_t a = f.net.bus_index(br.from_bus), b = f.net.bus_index(br.to_bus);
      const BranchAdmittance ba = branch_admittance(br);
      const oracle::cplx sf = v[a] * std::conj(ba.yff * v[a] + ba.yft * v[b]);
      const oracle::cplx st = v[b] * std::conj(ba.ytf * v[a] + ba.ytt * v[b]);
      losses += (sf + st).real();
    }
    for (std::size_t i = 0; i < f.net.num_buses(); ++i) losses += f.net.buses[i].g_shunt * std::norm(v[i]);
    const BusPower s = bus_power(*f.y, r.state);
    CHECK(std::abs(s.p.sum() - losses) < 1e-8);
    // PV magnitudes held at their setpoints.
    for (std::size_t i = 0; i < f.net.num_buses(); ++i)
      if (f.net.buses[i].kind != BusKind::PQ) CHECK(std::abs(std::abs(v[i]) - f.spec.v_set[i]) < 1e-8);
  }
}
