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

#include "power_flow.hpp"

#include <cmath>
#include <sstream>

#include "error.hpp"

namespace spice {

PfSpec make_pf_spec(const Network& net, std::shared_ptr<const AdmittanceMatrix> y, const Injections& inj) {
  PfSpec spec;
  spec.admittance = std::move(y);
  const std::size_t n = net.num_buses();
  spec.kind.resize(n);
  spec.v_set.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    spec.kind[i] = net.buses[i].kind;
    spec.v_set[i] = net.buses[i].nominal_v;
  }
  spec.p = inj.p;
  spec.q = inj.q;
  return spec;
}

VoltageState flat_start(const PfSpec& spec) {
  const auto n = static_cast<Eigen::Index>(spec.size());
  VoltageState v{Eigen::VectorXd::Ones(n), Eigen::VectorXd::Zero(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    if (spec.kind[static_cast<std::size_t>(i)] != BusKind::PQ) v.v_re(i) = spec.v_set[static_cast<std::size_t>(i)];
  }
  return v;
}

BusPower bus_power(const AdmittanceMatrix& y, const VoltageState& v) {
  const Eigen::VectorXd i_re = y.G * v.v_re - y.B * v.v_im;
  const Eigen::VectorXd i_im = y.B * v.v_re + y.G * v.v_im;
  return BusPower{v.v_re.cwiseProduct(i_re) + v.v_im.cwiseProduct(i_im),
                  v.v_im.cwiseProduct(i_re) - v.v_re.cwiseProduct(i_im)};
}

Eigen::VectorXd residual(const PfSpec& spec, const VoltageState& v) {
  const std::size_t n = spec.size();
  const BusPower s = bus_power(*spec.admittance, v);
  Eigen::VectorXd r(2 * static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    switch (spec.kind[i]) {
      case BusKind::PQ:
        r(2 * ii) = s.p(ii) - spec.p[i];
        r(2 * ii + 1) = s.q(ii) - spec.q[i];
        break;
      case BusKind::PV:
        r(2 * ii) = s.p(ii) - spec.p[i];
        r(2 * ii + 1) = v.v_re(ii) * v.v_re(ii) + v.v_im(ii) * v.v_im(ii) - spec.v_set[i] * spec.v_set[i];
        break;
      case BusKind::Slack:
        r(2 * ii) = v.v_re(ii) - spec.v_set[i];
        r(2 * ii + 1) = v.v_im(ii);
        break;
    }
  }
  return r;
}

SparseMatrix jacobian(const PfSpec& spec, const VoltageState& v) {
  const AdmittanceMatrix& y = *spec.admittance;
  const auto n = static_cast<Eigen::Index>(spec.size());
  const Eigen::VectorXd i_re = y.G * v.v_re - y.B * v.v_im;
  const Eigen::VectorXd i_im = y.B * v.v_re + y.G * v.v_im;

  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(4 * y.G.nonZeros()));
  for (Eigen::Index j = 0; j < n; ++j) {
    SparseMatrix::InnerIterator g(y.G, j), b(y.B, j);
    for (; g; ++g, ++b) {
      const auto i = g.row();
      const double gij = g.value(), bij = b.value();
      const double e = v.v_re(i), f = v.v_im(i);
      double dp_de = e * gij + f * bij;
      double dp_df = -e * bij + f * gij;
      double dq_de = f * gij - e * bij;
      double dq_df = -f * bij - e * gij;
      if (i == j) {
        dp_de += i_re(i);
        dp_df += i_im(i);
        dq_de -= i_im(i);
        dq_df += i_re(i);
      }
      switch (spec.kind[static_cast<std::size_t>(i)]) {
        case BusKind::PQ:
          break;
        case BusKind::PV:
          dq_de = i == j ? 2.0 * e : 0.0;
          dq_df = i == j ? 2.0 * f : 0.0;
          break;
        case BusKind::Slack:
          dp_de = i == j ? 1.0 : 0.0;
          dp_df = 0.0;
          dq_de = 0.0;
          dq_df = i == j ? 1.0 : 0.0;
          break;
      }
      t.emplace_back(2 * i, 2 * j, dp_de);
      t.emplace_back(2 * i, 2 * j + 1, dp_df);
      t.emplace_back(2 * i + 1, 2 * j, dq_de);
      t.emplace_back(2 * i + 1, 2 * j + 1, dq_df);
    }
  }
  SparseMatrix jac(2 * n, 2 * n);
  jac.setFromTriplets(t.begin(), t.end());
  jac.makeCompressed();
  return jac;
}

PfResult PowerFlowSolver::solve(const PfSpec& spec, const VoltageState& init) {
  const auto n = static_cast<Eigen::Index>(spec.size());
  PfResult res;
  res.state = init;
  Eigen::VectorXd r = residual(spec, res.state);
  res.mismatch = r.lpNorm<Eigen::Infinity>();

  while (res.mismatch > options_.tolerance && res.iterations < options_.max_iterations) {
    const SparseMatrix jac = jacobian(spec, res.state);
    if (!analyzed_ || analyzed_size_ != jac.rows()) {
      lu_.analyzePattern(jac);
      analyzed_ = true;
      analyzed_size_ = jac.rows();
    }
    lu_.factorize(jac);
    if (lu_.info() != Eigen::Success) fail(ErrorKind::Singular, "singular power flow Jacobian");
    const Eigen::VectorXd dx = lu_.solve(r);
    if (!dx.allFinite()) fail(ErrorKind::Singular, "singular power flow Jacobian");

    double step = 1.0;
    VoltageState trial;
    Eigen::VectorXd r_trial;
    for (int halving = 0; halving <= 10; ++halving) {
      trial = res.state;
      for (Eigen::Index i = 0; i < n; ++i) {
        trial.v_re(i) -= step * dx(2 * i);
        trial.v_im(i) -= step * dx(2 * i + 1);
      }
      r_trial = residual(spec, trial);
      if (r_trial.allFinite() && r_trial.lpNorm<Eigen::Infinity>() <= res.mismatch) break;
      step *= 0.5;
    }
    res.state = std::move(trial);
    r = std::move(r_trial);
    res.mismatch = r.allFinite() ? r.lpNorm<Eigen::Infinity>() : HUGE_VAL;
    ++res.iterations;
    if (!std::isfinite(res.mismatch)) break;
  }
  res.converged = res.mismatch <= options_.tolerance;
  return res;
}

PfResult solve_pf(const PfSpec& spec, const VoltageState& init, PfOptions options) {
  PowerFlowSolver solver(options);
  PfResult res = solver.solve(spec, init);
  if (!res.converged) {
    std::ostringstream msg;
    msg << "power flow did not converge after " << res.iterations << " iterations (mismatch " << res.mismatch << ")";
    fail(ErrorKind::NonConvergence, msg.str());
  }
  return res;
}

}  // namespace spice
