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

#include "opf.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "error.hpp"

namespace spice {

OpfLimits network_limits(const Network& net) {
  OpfLimits l;
  for (const Bus& b : net.buses) {
    l.v_min.push_back(b.v_min);
    l.v_max.push_back(b.v_max);
  }
  for (const Branch& br : net.branches) l.s_max.push_back(br.s_max);
  for (const Generator& g : net.generators) {
    l.p_min.push_back(g.p_min);
    l.p_max.push_back(g.p_max);
    l.q_min.push_back(g.q_min);
    l.q_max.push_back(g.q_max);
  }
  return l;
}

double generation_cost(const Network& net, const std::vector<double>& p_gen) {
  double total = 0.0;
  for (std::size_t g = 0; g < net.generators.size(); ++g) {
    double pk = 1.0;
    for (double c : net.generators[g].cost) {
      total += c * pk;
      pk *= p_gen[g];
    }
  }
  return total;
}

namespace {

using Mat4 = Eigen::Matrix4d;
using Vec4 = Eigen::Vector4d;

// Adds the bilinear term c * u_p * u_q to the symmetric form u' A u.
void add_bilinear(Mat4& a, int p, int q, double c) {
  if (p == q) {
    a(p, p) += c;
  } else {
    a(p, q) += 0.5 * c;
    a(q, p) += 0.5 * c;
  }
}

// Re and Im of V_a conj(y V_b) as quadratic forms in u = (e_from, f_from, e_to, f_to);
// a, b select the end (0 = from, 1 = to).
void add_power_term(Mat4& re, Mat4& im, int a, int b, std::complex<double> y) {
  const int ea = 2 * a, fa = 2 * a + 1, eb = 2 * b, fb = 2 * b + 1;
  const double g = y.real(), s = y.imag();
  // Re: e_a (g e_b - s f_b) + f_a (s e_b + g f_b)
  add_bilinear(re, ea, eb, g);
  add_bilinear(re, ea, fb, -s);
  add_bilinear(re, fa, eb, s);
  add_bilinear(re, fa, fb, g);
  // Im: f_a (g e_b - s f_b) - e_a (s e_b + g f_b)
  add_bilinear(im, fa, eb, g);
  add_bilinear(im, fa, fb, -s);
  add_bilinear(im, ea, eb, -s);
  add_bilinear(im, ea, fb, -g);
}

enum class Ineq { VLow, VHigh, Flow, PLow, PHigh, QLow, QHigh };

struct IneqRow {
  Ineq type;
  std::size_t element;  // bus, flow-form or generator index
  double bound;
};

struct FlowForm {
  std::array<Eigen::Index, 4> vars;  // indices of (e_f, f_f, e_t, f_t)
  Mat4 re, im;
  double limit_sq;
};

class OpfProblem : public NlpProblem {
 public:
  OpfProblem(const Network& net, const OpfLimits& limits)
      : net_(net), y_(build_admittance(net)), n_(static_cast<Eigen::Index>(net.num_buses())),
        g_(static_cast<Eigen::Index>(net.generators.size())) {
    load_p_.assign(net.num_buses(), 0.0);
    load_q_.assign(net.num_buses(), 0.0);
    for (const Load& l : net.loads) {
      load_p_[net.bus_index(l.bus)] += l.p_nom;
      load_q_[net.bus_index(l.bus)] += l.q_nom;
    }
    for (std::size_t i = 0; i < net.num_buses(); ++i) {
      rows_.push_back({Ineq::VLow, i, limits.v_min[i] * limits.v_min[i]});
      rows_.push_back({Ineq::VHigh, i, limits.v_max[i] * limits.v_max[i]});
    }
    for (std::size_t l = 0; l < net.num_branches(); ++l) {
      if (!(limits.s_max[l] > 0.0)) continue;
      const Branch& br = net.branches[l];
      const auto f = static_cast<Eigen::Index>(net.bus_index(br.from_bus));
      const auto t = static_cast<Eigen::Index>(net.bus_index(br.to_bus));
      const BranchAdmittance ya = branch_admittance(br);
      for (int end = 0; end < 2; ++end) {
        FlowForm form{{f, n_ + f, t, n_ + t}, Mat4::Zero(), Mat4::Zero(), limits.s_max[l] * limits.s_max[l]};
        if (end == 0) {
          add_power_term(form.re, form.im, 0, 0, ya.yff);
          add_power_term(form.re, form.im, 0, 1, ya.yft);
        } else {
          add_power_term(form.re, form.im, 1, 0, ya.ytf);
          add_power_term(form.re, form.im, 1, 1, ya.ytt);
        }
        rows_.push_back({Ineq::Flow, flows_.size(), 0.0});
        flows_.push_back(form);
      }
    }
    for (std::size_t k = 0; k < net.generators.size(); ++k) {
      if (limits.p_max[k] - limits.p_min[k] < 1e-9) {
        fixed_p_.emplace_back(k, 0.5 * (limits.p_min[k] + limits.p_max[k]));
      } else {
        if (std::isfinite(limits.p_min[k])) rows_.push_back({Ineq::PLow, k, limits.p_min[k]});
        if (std::isfinite(limits.p_max[k])) rows_.push_back({Ineq::PHigh, k, limits.p_max[k]});
      }
      if (limits.q_max[k] - limits.q_min[k] < 1e-9) {
        fixed_q_.emplace_back(k, 0.5 * (limits.q_min[k] + limits.q_max[k]));
      } else {
        if (std::isfinite(limits.q_min[k])) rows_.push_back({Ineq::QLow, k, limits.q_min[k]});
        if (std::isfinite(limits.q_max[k])) rows_.push_back({Ineq::QHigh, k, limits.q_max[k]});
      }
    }
  }

  Eigen::Index num_variables() const override { return 2 * n_ + 2 * g_; }
  Eigen::Index ve(std::size_t i) const { return static_cast<Eigen::Index>(i); }
  Eigen::Index vf(std::size_t i) const { return n_ + static_cast<Eigen::Index>(i); }
  Eigen::Index vp(std::size_t k) const { return 2 * n_ + static_cast<Eigen::Index>(k); }
  Eigen::Index vq(std::size_t k) const { return 2 * n_ + g_ + static_cast<Eigen::Index>(k); }

  void set_cost_scale(double s) { cost_scale_ = s; }

  double raw_cost(const Eigen::VectorXd& x) const {
    std::vector<double> p(static_cast<std::size_t>(g_));
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = x(vp(k));
    return generation_cost(net_, p);
  }

  void evaluate(const Eigen::VectorXd& x, NlpPoint& out) const override {
    const Eigen::Index nx = num_variables();
    const Eigen::VectorXd e = x.head(n_), f = x.segment(n_, n_);
    const Eigen::VectorXd i_re = y_.G * e - y_.B * f, i_im = y_.B * e + y_.G * f;

    out.f = 0.0;
    out.df = Eigen::VectorXd::Zero(nx);
    for (std::size_t k = 0; k < net_.generators.size(); ++k) {
      const auto& c = net_.generators[k].cost;
      const double p = x(vp(k));
      double pk = 1.0, d = 0.0;
      for (std::size_t j = 0; j < c.size(); ++j) {
        out.f += c[j] * pk;
        if (j + 1 < c.size()) d += static_cast<double>(j + 1) * c[j + 1] * pk;
        pk *= p;
      }
      out.df(vp(k)) = cost_scale_ * d;
    }
    out.f *= cost_scale_;

    // Equalities: P and Q balance per bus, slack reference angle, fixed outputs.
    const Eigen::Index nh = 2 * n_ + 1 + static_cast<Eigen::Index>(fixed_p_.size() + fixed_q_.size());
    out.h.resize(nh);
    std::vector<Eigen::Triplet<double>> th;
    for (Eigen::Index i = 0; i < n_; ++i) {
      out.h(i) = e(i) * i_re(i) + f(i) * i_im(i) + load_p_[static_cast<std::size_t>(i)];
      out.h(n_ + i) = f(i) * i_re(i) - e(i) * i_im(i) + load_q_[static_cast<std::size_t>(i)];
    }
    for (Eigen::Index j = 0; j < n_; ++j) {
      SparseMatrix::InnerIterator gi(y_.G, j), bi(y_.B, j);
      for (; gi; ++gi, ++bi) {
        const Eigen::Index i = gi.row();
        const double gij = gi.value(), bij = bi.value();
        double dp_de = e(i) * gij + f(i) * bij, dp_df = -e(i) * bij + f(i) * gij;
        double dq_de = f(i) * gij - e(i) * bij, dq_df = -f(i) * bij - e(i) * gij;
        if (i == j) {
          dp_de += i_re(i);
          dp_df += i_im(i);
          dq_de -= i_im(i);
          dq_df += i_re(i);
        }
        th.emplace_back(i, j, dp_de);
        th.emplace_back(i, n_ + j, dp_df);
        th.emplace_back(n_ + i, j, dq_de);
        th.emplace_back(n_ + i, n_ + j, dq_df);
      }
    }
    for (std::size_t k = 0; k < net_.generators.size(); ++k) {
      const auto b = static_cast<Eigen::Index>(net_.bus_index(net_.generators[k].bus));
      out.h(b) -= x(vp(k));
      out.h(n_ + b) -= x(vq(k));
      th.emplace_back(b, vp(k), -1.0);
      th.emplace_back(n_ + b, vq(k), -1.0);
    }
    Eigen::Index row = 2 * n_;
    out.h(row) = f(static_cast<Eigen::Index>(net_.slack_index()));
    th.emplace_back(row++, vf(net_.slack_index()), 1.0);
    for (const auto& [k, value] : fixed_p_) {
      out.h(row) = x(vp(k)) - value;
      th.emplace_back(row++, vp(k), 1.0);
    }
    for (const auto& [k, value] : fixed_q_) {
      out.h(row) = x(vq(k)) - value;
      th.emplace_back(row++, vq(k), 1.0);
    }
    out.dh.resize(nh, nx);
    out.dh.setFromTriplets(th.begin(), th.end());

    const auto ng = static_cast<Eigen::Index>(rows_.size());
    out.g.resize(ng);
    std::vector<Eigen::Triplet<double>> tg;
    for (Eigen::Index r = 0; r < ng; ++r) {
      const IneqRow& q = rows_[static_cast<std::size_t>(r)];
      const std::size_t i = q.element;
      switch (q.type) {
        case Ineq::VLow:
        case Ineq::VHigh: {
          const double sign = q.type == Ineq::VLow ? -1.0 : 1.0;
          const double vsq = x(ve(i)) * x(ve(i)) + x(vf(i)) * x(vf(i));
          out.g(r) = sign * (vsq - q.bound);
          tg.emplace_back(r, ve(i), sign * 2.0 * x(ve(i)));
          tg.emplace_back(r, vf(i), sign * 2.0 * x(vf(i)));
          break;
        }
        case Ineq::Flow: {
          const FlowForm& form = flows_[i];
          Vec4 u;
          for (int a = 0; a < 4; ++a) u(a) = x(form.vars[static_cast<std::size_t>(a)]);
          const double re = u.dot(form.re * u), im = u.dot(form.im * u);
          out.g(r) = re * re + im * im - form.limit_sq;
          const Vec4 grad = 4.0 * re * (form.re * u) + 4.0 * im * (form.im * u);
          for (int a = 0; a < 4; ++a) tg.emplace_back(r, form.vars[static_cast<std::size_t>(a)], grad(a));
          break;
        }
        case Ineq::PLow:
          out.g(r) = q.bound - x(vp(i));
          tg.emplace_back(r, vp(i), -1.0);
          break;
        case Ineq::PHigh:
          out.g(r) = x(vp(i)) - q.bound;
          tg.emplace_back(r, vp(i), 1.0);
          break;
        case Ineq::QLow:
          out.g(r) = q.bound - x(vq(i));
          tg.emplace_back(r, vq(i), -1.0);
          break;
        case Ineq::QHigh:
          out.g(r) = x(vq(i)) - q.bound;
          tg.emplace_back(r, vq(i), 1.0);
          break;
      }
    }
    out.dg.resize(ng, nx);
    out.dg.setFromTriplets(tg.begin(), tg.end());
  }

  SparseMatrix hessian(const Eigen::VectorXd& x, const Eigen::VectorXd& lambda,
                       const Eigen::VectorXd& mu) const override {
    const Eigen::Index nx = num_variables();
    std::vector<Eigen::Triplet<double>> t;
    for (std::size_t k = 0; k < net_.generators.size(); ++k) {
      const auto& c = net_.generators[k].cost;
      const double p = x(vp(k));
      double pk = 1.0, d2 = 0.0;
      for (std::size_t j = 2; j < c.size(); ++j) {
        d2 += static_cast<double>(j * (j - 1)) * c[j] * pk;
        pk *= p;
      }
      t.emplace_back(vp(k), vp(k), cost_scale_ * d2);
    }

    const Eigen::VectorXd lp = lambda.head(n_), lq = lambda.segment(n_, n_);
    const SparseMatrix a = lp.asDiagonal() * y_.G;  // ee / ff symmetric part from P
    const SparseMatrix c = lq.asDiagonal() * y_.B;  // ee / ff symmetric part from Q
    const SparseMatrix m = SparseMatrix(lp.asDiagonal() * y_.B) + SparseMatrix(lq.asDiagonal() * y_.G);
    auto sym = [&](const SparseMatrix& s, double sign) {
      for (int k = 0; k < s.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(s, k); it; ++it) {
          const double v = sign * it.value();
          for (Eigen::Index off : {Eigen::Index{0}, n_}) {
            t.emplace_back(off + it.row(), off + it.col(), v);
            t.emplace_back(off + it.col(), off + it.row(), v);
          }
        }
    };
    sym(a, 1.0);
    sym(c, -1.0);
    auto add_ef = [&](Eigen::Index r, Eigen::Index col, double v) {
      t.emplace_back(r, n_ + col, v);
      t.emplace_back(n_ + col, r, v);
    };
    for (int k = 0; k < m.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
        add_ef(it.row(), it.col(), -it.value());
        add_ef(it.col(), it.row(), it.value());
      }

    for (std::size_t r = 0; r < rows_.size(); ++r) {
      const IneqRow& q = rows_[r];
      const double w = mu(static_cast<Eigen::Index>(r));
      if (q.type == Ineq::VLow || q.type == Ineq::VHigh) {
        const double v = (q.type == Ineq::VLow ? -2.0 : 2.0) * w;
        t.emplace_back(ve(q.element), ve(q.element), v);
        t.emplace_back(vf(q.element), vf(q.element), v);
      } else if (q.type == Ineq::Flow) {
        const FlowForm& form = flows_[q.element];
        Vec4 u;
        for (int a4 = 0; a4 < 4; ++a4) u(a4) = x(form.vars[static_cast<std::size_t>(a4)]);
        const Vec4 gre = 2.0 * form.re * u, gim = 2.0 * form.im * u;
        const double re = u.dot(form.re * u), im = u.dot(form.im * u);
        const Mat4 h = w * (2.0 * gre * gre.transpose() + 4.0 * re * form.re + 2.0 * gim * gim.transpose() +
                            4.0 * im * form.im);
        for (int p = 0; p < 4; ++p)
          for (int s = 0; s < 4; ++s)
            t.emplace_back(form.vars[static_cast<std::size_t>(p)], form.vars[static_cast<std::size_t>(s)], h(p, s));
      }
    }
    SparseMatrix hess(nx, nx);
    hess.setFromTriplets(t.begin(), t.end());
    hess.makeCompressed();
    return hess;
  }

  const Network& net_;
  AdmittanceMatrix y_;
  Eigen::Index n_, g_;
  std::vector<double> load_p_, load_q_;
  std::vector<IneqRow> rows_;
  std::vector<FlowForm> flows_;
  std::vector<std::pair<std::size_t, double>> fixed_p_, fixed_q_;
  double cost_scale_ = 1.0;
};

}  // namespace

OpfResult InteriorPointOpf::solve(const Network& net, const OpfLimits& limits) const {
  OpfProblem problem(net, limits);
  const std::size_t n = net.num_buses(), ng = net.generators.size();

  // Start from the power flow at the scheduled dispatch when it converges.
  Injections inj;
  inj.p.assign(n, 0.0);
  inj.q.assign(n, 0.0);
  for (const Load& l : net.loads) {
    inj.p[net.bus_index(l.bus)] -= l.p_nom;
    inj.q[net.bus_index(l.bus)] -= l.q_nom;
  }
  for (const Generator& g : net.generators) inj.p[net.bus_index(g.bus)] += std::clamp(g.p_nom, g.p_min, g.p_max);
  auto y = std::make_shared<const AdmittanceMatrix>(build_admittance(net));
  const PfSpec spec = make_pf_spec(net, y, inj);
  PowerFlowSolver pf;
  PfResult start = pf.solve(spec, flat_start(spec));
  if (!start.converged) start.state = flat_start(spec);

  Eigen::VectorXd x0(problem.num_variables());
  x0.head(static_cast<Eigen::Index>(n)) = start.state.v_re;
  x0.segment(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)) = start.state.v_im;
  for (std::size_t k = 0; k < ng; ++k) {
    const Generator& g = net.generators[k];
    const double p_lo = limits.p_min[k], p_hi = limits.p_max[k];
    const double q_lo = limits.q_min[k], q_hi = limits.q_max[k];
    x0(problem.vp(k)) = std::isfinite(p_lo) && std::isfinite(p_hi) ? 0.5 * (p_lo + p_hi) : std::clamp(g.p_nom, p_lo, p_hi);
    x0(problem.vq(k)) = std::isfinite(q_lo) && std::isfinite(q_hi) ? 0.5 * (q_lo + q_hi) : 0.0;
  }
  problem.set_cost_scale(1.0 / std::max(1.0, std::abs(problem.raw_cost(x0))));

  const IpmResult r = solve_ipm(problem, x0, options_);
  if (!r.converged) {
    std::ostringstream msg;
    msg << "OPF did not converge after " << r.iterations << " iterations (constraint violation " << r.feasibility
        << ")";
    fail(r.feasibility > 1e-4 ? ErrorKind::Infeasible : ErrorKind::NonConvergence, msg.str());
  }
  OpfResult out;
  out.voltage.v_re = r.x.head(static_cast<Eigen::Index>(n));
  out.voltage.v_im = r.x.segment(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < ng; ++k) {
    out.p_gen.push_back(r.x(problem.vp(k)));
    out.q_gen.push_back(r.x(problem.vq(k)));
  }
  out.cost = generation_cost(net, out.p_gen);
  out.iterations = r.iterations;
  return out;
}

OpfResult deterministic_opf(const Network& net, const OpfLimits& limits, const OpfSolver& solver) {
  const std::size_t n = net.num_buses(), ng = net.generators.size();
  if (limits.v_min.size() != n || limits.v_max.size() != n || limits.s_max.size() != net.num_branches() ||
      limits.p_min.size() != ng || limits.p_max.size() != ng || limits.q_min.size() != ng || limits.q_max.size() != ng)
    fail(ErrorKind::Config, "OPF limits do not match the network");
  for (std::size_t i = 0; i < n; ++i)
    if (limits.v_min[i] > limits.v_max[i])
      fail(ErrorKind::Infeasible, "voltage limits crossed at bus " + std::to_string(net.buses[i].id));
  for (std::size_t k = 0; k < ng; ++k)
    if (limits.p_min[k] > limits.p_max[k] || limits.q_min[k] > limits.q_max[k])
      fail(ErrorKind::Infeasible, "generation limits crossed at generator " + std::to_string(k + 1));
  return solver.solve(net, limits);
}

Network with_operating_point(const Network& net, const OpfResult& op) {
  Network out = net;
  for (std::size_t k = 0; k < out.generators.size(); ++k) {
    Generator& g = out.generators[k];
    g.p_nom = std::clamp(op.p_gen[k], g.p_min, g.p_max);
    const auto b = static_cast<Eigen::Index>(net.bus_index(g.bus));
    g.v_nom = std::hypot(op.voltage.v_re(b), op.voltage.v_im(b));
  }
  for (std::size_t i = 0; i < out.buses.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    out.buses[i].nominal_v = std::hypot(op.voltage.v_re(ii), op.voltage.v_im(ii));
  }
  out.finalize();
  return out;
}

}  // namespace spice
