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

#include "spice_solver.hpp"

#include <chrono>
#include <cmath>

#include <Eigen/SparseCholesky>

#include "error.hpp"

namespace spice {

std::string_view to_string(Variable v) {
  switch (v) {
    case Variable::VRe: return "v_re";
    case Variable::VIm: return "v_im";
    case Variable::P: return "p";
    case Variable::Q: return "q";
  }
  return "?";
}

Variable variable_from_string(std::string_view s) {
  for (Variable v : kAllVariables)
    if (to_string(v) == s) return v;
  fail(ErrorKind::Parse, "unknown variable '" + std::string(s) + "'");
}

Eigen::MatrixXd& PceCoefficients::operator[](Variable v) {
  switch (v) {
    case Variable::VRe: return v_re;
    case Variable::VIm: return v_im;
    case Variable::P: return p;
    case Variable::Q: break;
  }
  return q;
}

const Eigen::MatrixXd& PceCoefficients::operator[](Variable v) const {
  return const_cast<PceCoefficients&>(*this)[v];
}

SparsityMask::SparsityMask(std::size_t buses, const MultiIndexSet& set)
    : buses_(buses), terms_(set.size()), first_(set.count_up_to_degree(1)) {
  keep_.assign(4 * buses_ * (terms_ - first_), 1);
}

std::size_t SparsityMask::dropped() const {
  std::size_t d = 0;
  for (char k : keep_) d += k == 0;
  return d;
}

double SparsityMask::sparsity() const {
  return keep_.empty() ? 0.0 : static_cast<double>(dropped()) / static_cast<double>(keep_.size());
}

SparsityMask build_mask(const PceCoefficients& deg1, const MultiIndexSet& set, double c_off) {
  if (!(c_off >= 0.0)) fail(ErrorKind::Config, "c_off must be nonnegative");
  SparsityMask mask(deg1.num_buses(), set);
  if (set.degree() < 2) return mask;
  const int n = set.dimension();
  std::vector<double> x1(static_cast<std::size_t>(n));
  for (Variable v : kAllVariables) {
    const Eigen::MatrixXd& c = deg1[v];
    for (std::size_t bus = 0; bus < deg1.num_buses(); ++bus) {
      double largest = 0.0;
      for (int j = 0; j < n; ++j) {
        x1[static_cast<std::size_t>(j)] = c(static_cast<Eigen::Index>(bus), static_cast<Eigen::Index>(set.unit(j)));
        largest = std::max(largest, std::abs(x1[static_cast<std::size_t>(j)]));
      }
      const double threshold = c_off * largest;
      // A row without degree-1 variation keeps nothing once c_off > 0.
      const bool flat = largest == 0.0 && c_off > 0.0;
      for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
          if (flat || std::abs(x1[static_cast<std::size_t>(i)] * x1[static_cast<std::size_t>(j)]) < threshold)
            mask.drop(v, bus, set.pair(i, j));
        }
      }
    }
  }
  return mask;
}

void apply_mask(const SparsityMask& mask, PceCoefficients& c) {
  const std::size_t kk = c.basis->size();
  for (Variable v : kAllVariables) {
    Eigen::MatrixXd& m = c[v];
    for (std::size_t bus = 0; bus < c.num_buses(); ++bus)
      for (std::size_t k = 0; k < kk; ++k)
        if (!mask.keep(v, bus, k)) m(static_cast<Eigen::Index>(bus), static_cast<Eigen::Index>(k)) = 0.0;
  }
}

std::shared_ptr<const PceBasis> make_basis(const UncertaintyModel& model, int degree) {
  if (degree < 1 || degree > 2) fail(ErrorKind::Config, "degree must be 1 or 2");
  return std::make_shared<const PceBasis>(MultiIndexSet(model.n_areas, degree), family_for(model.distribution));
}

void derive_injections(const GalerkinSystem& sys, PceCoefficients& c) {
  Eigen::MatrixXd pp, qq;
  sys.project_power({c.v_re, c.v_im}, false, pp, qq);
  c.p = sys.p();
  c.q = sys.q();
  for (std::size_t i = 0; i < sys.num_buses(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    if (sys.kind()[i] != BusKind::PQ) c.q.row(ii) = qq.row(ii);
    if (sys.kind()[i] == BusKind::Slack) c.p.row(ii) = pp.row(ii);
  }
}

PceCoefficients solve_degree1(const Network& net, std::shared_ptr<const AdmittanceMatrix> y,
                              const UncertaintyModel& model, std::shared_ptr<const PceBasis> basis,
                              const VoltageState& warm, NewtonReport* report) {
  auto basis1 = basis->degree() == 1
                    ? basis
                    : std::make_shared<const PceBasis>(MultiIndexSet(model.n_areas, 1), basis->family());
  const GalerkinSystem sys1 = make_galerkin_system(net, y, model, basis1);
  const auto n = static_cast<Eigen::Index>(net.num_buses());
  const auto k1 = static_cast<Eigen::Index>(basis1->size());
  CoefficientState s{Eigen::MatrixXd::Zero(n, k1), Eigen::MatrixXd::Zero(n, k1)};
  s.v_re.col(0) = warm.v_re;
  s.v_im.col(0) = warm.v_im;
  const NewtonReport rep = solve_galerkin_newton(sys1, s);
  if (report) *report = rep;

  PceCoefficients c1{basis1, s.v_re, s.v_im, {}, {}};
  derive_injections(sys1, c1);
  if (basis1 == basis) return c1;

  const auto kk = static_cast<Eigen::Index>(basis->size());
  PceCoefficients c{basis, Eigen::MatrixXd::Zero(n, kk), Eigen::MatrixXd::Zero(n, kk), Eigen::MatrixXd::Zero(n, kk),
                    Eigen::MatrixXd::Zero(n, kk)};
  for (Variable v : kAllVariables) c[v].leftCols(k1) = c1[v];
  return c;
}

LeastSquaresReport solve_degree2(const GalerkinSystem& sys, const SparsityMask& mask, bool truncate,
                                 const SpiceConfig& config, CoefficientState& warm) {
  const std::size_t kk = sys.num_terms();
  std::vector<Eigen::Index> column_map(static_cast<std::size_t>(sys.size()), -1);
  std::vector<Eigen::Index> free_cols;
  for (std::size_t i = 0; i < sys.num_buses(); ++i) {
    for (std::size_t k = 0; k < kk; ++k) {
      for (int c = 0; c < 2; ++c) {
        const Variable v = c == 0 ? Variable::VRe : Variable::VIm;
        if (!mask.keep(v, i, k)) {
          (c == 0 ? warm.v_re : warm.v_im)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = 0.0;
          continue;
        }
        const Eigen::Index full = sys.index(i, k, c);
        column_map[static_cast<std::size_t>(full)] = static_cast<Eigen::Index>(free_cols.size());
        free_cols.push_back(full);
      }
    }
  }
  const auto m = static_cast<Eigen::Index>(free_cols.size());

  LeastSquaresReport rep;
  rep.unknowns = static_cast<int>(m);
  Eigen::VectorXd x = sys.pack(warm);
  Eigen::VectorXd r = sys.residual(warm, truncate);
  double objective = r.squaredNorm();
  rep.history.push_back(objective);

  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  bool analyzed = false;
  double lambda = config.lambda0;
  SparseMatrix identity(m, m);
  identity.setIdentity();

  while (rep.iterations < config.max_lm_iterations) {
    const SparseMatrix jac = sys.jacobian(sys.unpack(x), truncate, column_map, m);
    const Eigen::VectorXd jtr = jac.transpose() * r;
    rep.gradient = 2.0 * jtr.lpNorm<Eigen::Infinity>();
    if (rep.gradient <= config.gradient_tolerance) {
      rep.converged = true;
      break;
    }
    const SparseMatrix normal = SparseMatrix(jac.transpose()) * jac;
    bool accepted = false;
    while (lambda < 1e16) {
      const SparseMatrix damped = normal + lambda * identity;
      if (!analyzed) {
        ldlt.analyzePattern(damped);
        analyzed = true;
      }
      ldlt.factorize(damped);
      if (ldlt.info() == Eigen::Success) {
        const Eigen::VectorXd step = ldlt.solve(-jtr);
        Eigen::VectorXd trial = x;
        for (Eigen::Index c = 0; c < m; ++c) trial(free_cols[static_cast<std::size_t>(c)]) += step(c);
        const Eigen::VectorXd r_trial = sys.residual(sys.unpack(trial), truncate);
        const double obj_trial = r_trial.squaredNorm();
        if (std::isfinite(obj_trial) && obj_trial < objective) {
          const double decrease = objective - obj_trial;
          x = std::move(trial);
          r = r_trial;
          objective = obj_trial;
          rep.history.push_back(objective);
          lambda = std::max(lambda / 10.0, 1e-20);
          accepted = true;
          if (decrease < config.decrease_tolerance) rep.converged = true;
          break;
        }
      }
      lambda *= 10.0;
    }
    ++rep.iterations;
    if (!accepted || rep.converged) break;
  }
  rep.objective = objective;
  warm = sys.unpack(x);
  return rep;
}

namespace {

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

}  // namespace

SpiceResult run_spice(const Network& net, const UncertaintyModel& model, const SpiceConfig& config) {
  if (!(config.c_off >= 0.0)) fail(ErrorKind::Config, "c_off must be nonnegative");
  SpiceResult res;
  SpiceDiagnostics& d = res.diagnostics;
  auto y = std::make_shared<const AdmittanceMatrix>(build_admittance(net));
  auto basis = make_basis(model, config.degree);

  auto t0 = Clock::now();
  const std::vector<double> xi0(static_cast<std::size_t>(model.n_areas), 0.0);
  const PfSpec pf = make_pf_spec(net, y, inject(net, model, xi0));
  d.deterministic = solve_pf(pf, flat_start(pf), config.pf);
  d.stage_seconds[0] = seconds_since(t0);

  t0 = Clock::now();
  PceCoefficients c = solve_degree1(net, y, model, basis, d.deterministic.state, &d.degree1);
  d.stage_seconds[1] = seconds_since(t0);

  const GalerkinSystem sys = make_galerkin_system(net, y, model, basis);
  d.injection_scale = std::max(sys.p().lpNorm<Eigen::Infinity>(), sys.q().lpNorm<Eigen::Infinity>());
  d.full_pairs = full_pair_count(basis->index_set());
  d.truncated_pairs = truncated_pair_count(basis->index_set());

  t0 = Clock::now();
  res.mask = build_mask(c, basis->index_set(), config.c_off);
  d.degree2_entries = res.mask.degree2_entries();
  d.dropped = res.mask.dropped();
  d.sparsity = res.mask.sparsity();
  d.stage_seconds[2] = seconds_since(t0);

  t0 = Clock::now();
  CoefficientState s{c.v_re, c.v_im};
  if (config.degree == 2) d.degree2 = solve_degree2(sys, res.mask, config.truncate_quartic, config, s);
  c.v_re = s.v_re;
  c.v_im = s.v_im;
  derive_injections(sys, c);
  apply_mask(res.mask, c);
  d.consistency = sys.residual(s, false).lpNorm<Eigen::Infinity>();
  d.stage_seconds[3] = seconds_since(t0);

  res.coefficients = std::move(c);
  return res;
}

PceCoefficients solve_full_pce(const Network& net, const UncertaintyModel& model, int degree, NewtonReport* report) {
  auto y = std::make_shared<const AdmittanceMatrix>(build_admittance(net));
  auto basis = make_basis(model, degree);
  const std::vector<double> xi0(static_cast<std::size_t>(model.n_areas), 0.0);
  const PfSpec pf = make_pf_spec(net, y, inject(net, model, xi0));
  const PfResult det = solve_pf(pf, flat_start(pf));
  PceCoefficients c = solve_degree1(net, y, model, basis, det.state);
  const GalerkinSystem sys = make_galerkin_system(net, y, model, basis);
  CoefficientState s{c.v_re, c.v_im};
  const NewtonReport rep = solve_galerkin_newton(sys, s);
  if (report) *report = rep;
  c.v_re = s.v_re;
  c.v_im = s.v_im;
  derive_injections(sys, c);
  return c;
}

}  // namespace spice
