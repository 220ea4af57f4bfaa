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

#include "interior_point.hpp"

#include <cmath>

#include <Eigen/SparseLU>

#include "error.hpp"

namespace spice {

namespace {

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }
double max_or_zero(const Eigen::VectorXd& v) { return v.size() ? std::max(0.0, v.maxCoeff()) : 0.0; }

}  // namespace

IpmResult solve_ipm(const NlpProblem& problem, const Eigen::VectorXd& x0, const IpmOptions& opt) {
  const Eigen::Index nx = problem.num_variables();
  IpmResult res;
  res.x = x0;
  NlpPoint pt;
  problem.evaluate(res.x, pt);
  const Eigen::Index nh = pt.h.size(), ng = pt.g.size();

  Eigen::VectorXd z = Eigen::VectorXd::Ones(ng);
  for (Eigen::Index i = 0; i < ng; ++i)
    if (pt.g(i) < -1.0) z(i) = -pt.g(i);
  Eigen::VectorXd mu = Eigen::VectorXd::Ones(ng);
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(nh);
  double gamma = ng ? opt.sigma * z.dot(mu) / static_cast<double>(ng) : 0.0;
  double f_prev = pt.f;

  Eigen::SparseLU<SparseMatrix> lu;
  bool analyzed = false;

  for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
    const Eigen::VectorXd lx = pt.df + SparseMatrix(pt.dh.transpose()) * lambda + SparseMatrix(pt.dg.transpose()) * mu;
    const double feas = std::max(inf_norm(pt.h), max_or_zero(pt.g));
    const double grad = inf_norm(lx) / (1.0 + std::max(inf_norm(lambda), inf_norm(mu)));
    const double comp = ng ? z.dot(mu) / (1.0 + inf_norm(res.x)) : 0.0;
    const double cost = std::abs(pt.f - f_prev) / (1.0 + std::abs(f_prev));
    res.feasibility = feas;
    if (res.iterations > 0 && feas < opt.feasibility_tolerance && grad < opt.gradient_tolerance &&
        comp < opt.complementarity_tolerance && cost < opt.cost_tolerance) {
      res.converged = true;
      break;
    }
    if (!res.x.allFinite()) break;

    // Reduced KKT system [M dh'; dh 0] [dx; dlambda] = [-N; -h].
    const Eigen::VectorXd zinv = z.cwiseInverse();
    const SparseMatrix dgt = pt.dg.transpose();
    SparseMatrix m = problem.hessian(res.x, lambda, mu);
    if (ng) m += dgt * (mu.cwiseProduct(zinv)).asDiagonal() * pt.dg;
    const Eigen::VectorXd n =
        lx + (ng ? Eigen::VectorXd(dgt * zinv.cwiseProduct(Eigen::VectorXd::Constant(ng, gamma) + mu.cwiseProduct(pt.g)))
                 : Eigen::VectorXd::Zero(nx));

    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(m.nonZeros() + 2 * pt.dh.nonZeros() + nx + nh));
    for (int k = 0; k < m.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(m, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
    for (int k = 0; k < pt.dh.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(pt.dh, k); it; ++it) {
        t.emplace_back(nx + it.row(), it.col(), it.value());
        t.emplace_back(it.col(), nx + it.row(), it.value());
      }
    // Explicit zeros keep the pattern identical across iterations.
    for (Eigen::Index i = 0; i < nx + nh; ++i) t.emplace_back(i, i, 0.0);
    SparseMatrix kkt(nx + nh, nx + nh);
    kkt.setFromTriplets(t.begin(), t.end());
    kkt.makeCompressed();
    Eigen::VectorXd rhs(nx + nh);
    rhs << -n, -pt.h;

    if (!analyzed) {
      lu.analyzePattern(kkt);
      analyzed = true;
    }
    lu.factorize(kkt);
    if (lu.info() != Eigen::Success) break;
    const Eigen::VectorXd d = lu.solve(rhs);
    if (!d.allFinite()) break;
    const Eigen::VectorXd dx = d.head(nx), dlambda = d.tail(nh);

    Eigen::VectorXd dz, dmu;
    double alpha_p = 1.0, alpha_d = 1.0;
    if (ng) {
      dz = -pt.g - z - pt.dg * dx;
      dmu = -mu + zinv.cwiseProduct(Eigen::VectorXd::Constant(ng, gamma) - mu.cwiseProduct(dz));
      for (Eigen::Index i = 0; i < ng; ++i) {
        if (dz(i) < 0.0) alpha_p = std::min(alpha_p, opt.step_ratio * -z(i) / dz(i));
        if (dmu(i) < 0.0) alpha_d = std::min(alpha_d, opt.step_ratio * -mu(i) / dmu(i));
      }
    }
    res.x += alpha_p * dx;
    lambda += alpha_d * dlambda;
    if (ng) {
      z += alpha_p * dz;
      mu += alpha_d * dmu;
      gamma = opt.sigma * z.dot(mu) / static_cast<double>(ng);
    }
    f_prev = pt.f;
    problem.evaluate(res.x, pt);
  }
  res.lambda = lambda;
  res.mu = mu;
  res.f = pt.f;
  res.feasibility = std::max(inf_norm(pt.h), max_or_zero(pt.g));
  return res;
}

}  // namespace spice
