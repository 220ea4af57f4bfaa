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

#include "galerkin.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/SparseLU>

#include "error.hpp"

namespace spice {

GalerkinSystem::GalerkinSystem(std::shared_ptr<const AdmittanceMatrix> y, std::vector<BusKind> kind,
                               std::vector<double> v_set, std::shared_ptr<const PceBasis> basis, Eigen::MatrixXd p,
                               Eigen::MatrixXd q)
    : y_(std::move(y)),
      g_rows_(y_->G),
      b_rows_(y_->B),
      kind_(std::move(kind)),
      v_set_(std::move(v_set)),
      basis_(std::move(basis)),
      p_(std::move(p)),
      q_(std::move(q)) {
  const MultiIndexSet& set = basis_->index_set();
  std::vector<TripleEntry> kept;
  for (const TripleEntry& t : basis_->triple().entries()) {
    if (set.total_degree(t.k1) == 2 && set.total_degree(t.k2) == 2) continue;
    kept.push_back(t);
  }
  truncated_ = TripleTensor(std::move(kept), basis_->size());
}

Eigen::VectorXd GalerkinSystem::pack(const CoefficientState& s) const {
  Eigen::VectorXd x(size());
  for (std::size_t i = 0; i < num_buses(); ++i) {
    for (std::size_t k = 0; k < num_terms(); ++k) {
      x(index(i, k, 0)) = s.v_re(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
      x(index(i, k, 1)) = s.v_im(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    }
  }
  return x;
}

CoefficientState GalerkinSystem::unpack(const Eigen::VectorXd& x) const {
  const auto n = static_cast<Eigen::Index>(num_buses());
  const auto kk = static_cast<Eigen::Index>(num_terms());
  CoefficientState s{Eigen::MatrixXd(n, kk), Eigen::MatrixXd(n, kk)};
  for (std::size_t i = 0; i < num_buses(); ++i) {
    for (std::size_t k = 0; k < num_terms(); ++k) {
      s.v_re(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = x(index(i, k, 0));
      s.v_im(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = x(index(i, k, 1));
    }
  }
  return s;
}

void GalerkinSystem::project_power(const CoefficientState& s, bool truncate, Eigen::MatrixXd& p,
                                   Eigen::MatrixXd& q) const {
  const Eigen::MatrixXd i_re = y_->G * s.v_re - y_->B * s.v_im;
  const Eigen::MatrixXd i_im = y_->B * s.v_re + y_->G * s.v_im;
  const auto n = static_cast<Eigen::Index>(num_buses());
  const auto kk = static_cast<Eigen::Index>(num_terms());
  p.setZero(n, kk);
  q.setZero(n, kk);
  const TripleTensor& t = tensor(truncate);
  for (Eigen::Index k = 0; k < kk; ++k) {
    for (const TripleEntry& e : t.row(static_cast<std::size_t>(k))) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double er = s.v_re(i, e.k1), fi = s.v_im(i, e.k1);
        p(i, k) += e.value * (er * i_re(i, e.k2) + fi * i_im(i, e.k2));
        q(i, k) += e.value * (fi * i_re(i, e.k2) - er * i_im(i, e.k2));
      }
    }
  }
}

Eigen::VectorXd GalerkinSystem::residual(const CoefficientState& s, bool truncate) const {
  Eigen::MatrixXd pp, qq;
  project_power(s, truncate, pp, qq);
  const TripleTensor& t = tensor(truncate);
  Eigen::VectorXd r(size());
  for (std::size_t i = 0; i < num_buses(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    for (std::size_t k = 0; k < num_terms(); ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      switch (kind_[i]) {
        case BusKind::PQ:
          r(index(i, k, 0)) = pp(ii, kk) - p_(ii, kk);
          r(index(i, k, 1)) = qq(ii, kk) - q_(ii, kk);
          break;
        case BusKind::PV: {
          double vsq = 0.0;
          for (const TripleEntry& e : t.row(k))
            vsq += e.value * (s.v_re(ii, e.k1) * s.v_re(ii, e.k2) + s.v_im(ii, e.k1) * s.v_im(ii, e.k2));
          r(index(i, k, 0)) = pp(ii, kk) - p_(ii, kk);
          r(index(i, k, 1)) = vsq - (k == 0 ? v_set_[i] * v_set_[i] : 0.0);
          break;
        }
        case BusKind::Slack:
          r(index(i, k, 0)) = s.v_re(ii, kk) - (k == 0 ? v_set_[i] : 0.0);
          r(index(i, k, 1)) = s.v_im(ii, kk);
          break;
      }
    }
  }
  return r;
}

SparseMatrix GalerkinSystem::jacobian(const CoefficientState& s, bool truncate, std::span<const Eigen::Index> column_map,
                                      Eigen::Index columns) const {
  const bool mapped = !column_map.empty();
  if (!mapped) columns = size();
  const std::size_t kk = num_terms();
  const Eigen::MatrixXd i_re = y_->G * s.v_re - y_->B * s.v_im;
  const Eigen::MatrixXd i_im = y_->B * s.v_re + y_->G * s.v_im;
  const TripleTensor& tensor_ref = tensor(truncate);

  std::vector<Eigen::Triplet<double>> trip;
  std::vector<std::size_t> nbr;
  std::vector<double> gv, bv;
  // Two equation rows; columns laid out as ((local bus * 2 + c) * K + m).
  std::vector<double> d0, d1;
  std::vector<char> touched;
  std::vector<std::size_t> touched_list;

  auto emit = [&](Eigen::Index row, std::size_t col_full, double v) {
    Eigen::Index col = static_cast<Eigen::Index>(col_full);
    if (mapped) {
      col = column_map[col_full];
      if (col < 0) return;
    }
    trip.emplace_back(row, col, v);
  };

  for (std::size_t i = 0; i < num_buses(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    if (kind_[i] == BusKind::Slack) {
      for (std::size_t k = 0; k < kk; ++k) {
        emit(index(i, k, 0), static_cast<std::size_t>(index(i, k, 0)), 1.0);
        emit(index(i, k, 1), static_cast<std::size_t>(index(i, k, 1)), 1.0);
      }
      continue;
    }
    nbr.clear();
    gv.clear();
    bv.clear();
    std::size_t diag = 0;
    {
      Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator g(g_rows_, ii), b(b_rows_, ii);
      for (; g; ++g, ++b) {
        if (static_cast<std::size_t>(g.col()) == i) diag = nbr.size();
        nbr.push_back(static_cast<std::size_t>(g.col()));
        gv.push_back(g.value());
        bv.push_back(b.value());
      }
    }
    const std::size_t width = nbr.size() * 2 * kk;
    d0.assign(width, 0.0);
    d1.assign(width, 0.0);
    touched.assign(width, 0);
    auto at = [&](std::size_t loc, int c, std::size_t m) { return (loc * 2 + static_cast<std::size_t>(c)) * kk + m; };
    auto touch = [&](std::size_t pos) {
      if (!touched[pos]) {
        touched[pos] = 1;
        touched_list.push_back(pos);
      }
    };
    const bool pv = kind_[i] == BusKind::PV;

    for (std::size_t k = 0; k < kk; ++k) {
      touched_list.clear();
      for (const TripleEntry& e : tensor_ref.row(k)) {
        const double t = e.value;
        const double e1 = s.v_re(ii, e.k1), f1 = s.v_im(ii, e.k1);
        const double ir2 = i_re(ii, e.k2), ii2 = i_im(ii, e.k2);
        const std::size_t pe = at(diag, 0, e.k1), pf = at(diag, 1, e.k1);
        d0[pe] += t * ir2;
        d0[pf] += t * ii2;
        touch(pe);
        touch(pf);
        if (pv) {
          const std::size_t pe2 = at(diag, 0, e.k2), pf2 = at(diag, 1, e.k2);
          d1[pe] += t * s.v_re(ii, e.k2);
          d1[pe2] += t * e1;
          d1[pf] += t * s.v_im(ii, e.k2);
          d1[pf2] += t * f1;
          touch(pe2);
          touch(pf2);
        } else {
          d1[pf] += t * ir2;
          d1[pe] -= t * ii2;
        }
        for (std::size_t loc = 0; loc < nbr.size(); ++loc) {
          const double g = gv[loc], b = bv[loc];
          const std::size_t qe = at(loc, 0, e.k2), qf = at(loc, 1, e.k2);
          d0[qe] += t * (e1 * g + f1 * b);
          d0[qf] += t * (-e1 * b + f1 * g);
          if (!pv) {
            d1[qe] += t * (f1 * g - e1 * b);
            d1[qf] += t * (-f1 * b - e1 * g);
          }
          touch(qe);
          touch(qf);
        }
      }
      const Eigen::Index r0 = index(i, k, 0), r1 = index(i, k, 1);
      for (std::size_t pos : touched_list) {
        const std::size_t m = pos % kk;
        const std::size_t loc = pos / kk / 2;
        const int c = static_cast<int>((pos / kk) % 2);
        const auto col = static_cast<std::size_t>(index(nbr[loc], m, c));
        emit(r0, col, d0[pos]);
        emit(r1, col, d1[pos]);
        d0[pos] = 0.0;
        d1[pos] = 0.0;
        touched[pos] = 0;
      }
    }
  }
  SparseMatrix jac(size(), columns);
  jac.setFromTriplets(trip.begin(), trip.end());
  jac.makeCompressed();
  return jac;
}

void overload_injections(const Network& net, const UncertaintyModel& model, const PceBasis& basis,
                         Eigen::MatrixXd& p, Eigen::MatrixXd& q) {
  const auto n = static_cast<Eigen::Index>(net.num_buses());
  const auto kk = static_cast<Eigen::Index>(basis.size());
  p.setZero(n, kk);
  q.setZero(n, kk);
  const std::vector<double> xi0(static_cast<std::size_t>(model.n_areas), 0.0);
  const Injections nominal = inject(net, model, xi0);
  for (Eigen::Index i = 0; i < n; ++i) {
    p(i, 0) = nominal.p[static_cast<std::size_t>(i)];
    q(i, 0) = nominal.q[static_cast<std::size_t>(i)];
  }
  if (basis.degree() < 1) return;

  // Sensitivities per unit epsilon; epsilon multiplies last so scaling it is exact.
  const auto areas = static_cast<std::size_t>(model.n_areas);
  std::vector<double> area_load(areas, 0.0);
  Eigen::MatrixXd dp = Eigen::MatrixXd::Zero(n, model.n_areas), dq = Eigen::MatrixXd::Zero(n, model.n_areas);
  for (std::size_t l = 0; l < net.loads.size(); ++l) {
    const Load& load = net.loads[l];
    const auto a = static_cast<Eigen::Index>(model.area_of_load[l]);
    const auto b = static_cast<Eigen::Index>(net.bus_index(load.bus));
    dp(b, a) -= load.p_nom;
    dq(b, a) -= load.q_nom;
    area_load[static_cast<std::size_t>(a)] += load.p_nom;
  }
  const auto n_gen = static_cast<double>(net.generators.size());
  for (const Generator& g : net.generators) {
    const auto b = static_cast<Eigen::Index>(net.bus_index(g.bus));
    for (std::size_t a = 0; a < areas; ++a) dp(b, static_cast<Eigen::Index>(a)) += area_load[a] / n_gen;
  }
  const MultiIndexSet& set = basis.index_set();
  for (int a = 0; a < model.n_areas; ++a) {
    const auto k = static_cast<Eigen::Index>(set.unit(a));
    for (Eigen::Index i = 0; i < n; ++i) {
      p(i, k) = model.epsilon * dp(i, a);
      q(i, k) = model.epsilon * dq(i, a);
    }
  }
}

GalerkinSystem make_galerkin_system(const Network& net, std::shared_ptr<const AdmittanceMatrix> y,
                                    const UncertaintyModel& model, std::shared_ptr<const PceBasis> basis) {
  if (basis->dimension() != model.n_areas)
    fail(ErrorKind::Config, "basis dimension does not match the number of areas");
  Eigen::MatrixXd p, q;
  overload_injections(net, model, *basis, p, q);
  std::vector<BusKind> kind(net.num_buses());
  std::vector<double> v_set(net.num_buses());
  for (std::size_t i = 0; i < net.num_buses(); ++i) {
    kind[i] = net.buses[i].kind;
    v_set[i] = net.buses[i].nominal_v;
  }
  return GalerkinSystem(std::move(y), std::move(kind), std::move(v_set), std::move(basis), std::move(p), std::move(q));
}

std::size_t full_pair_count(const MultiIndexSet& set) { return set.size() * set.size(); }

std::size_t truncated_pair_count(const MultiIndexSet& set) {
  const std::size_t k2 = set.size() - set.count_up_to_degree(1);
  return set.size() * set.size() - k2 * k2;
}

NewtonReport solve_galerkin_newton(const GalerkinSystem& sys, CoefficientState& state, double tolerance,
                                   int max_iterations) {
  Eigen::SparseLU<SparseMatrix> lu;
  bool analyzed = false;
  NewtonReport rep;
  Eigen::VectorXd r = sys.residual(state, false);
  rep.mismatch = r.lpNorm<Eigen::Infinity>();
  while (rep.mismatch > tolerance && rep.iterations < max_iterations) {
    const SparseMatrix jac = sys.jacobian(state, false);
    if (!analyzed) {
      lu.analyzePattern(jac);
      analyzed = true;
    }
    lu.factorize(jac);
    if (lu.info() != Eigen::Success) fail(ErrorKind::Singular, "singular Galerkin Jacobian");
    const Eigen::VectorXd dx = lu.solve(r);
    if (!dx.allFinite()) fail(ErrorKind::Singular, "singular Galerkin Jacobian");
    const Eigen::VectorXd x = sys.pack(state);
    double step = 1.0;
    CoefficientState trial;
    Eigen::VectorXd r_trial;
    for (int halving = 0; halving <= 10; ++halving) {
      trial = sys.unpack(x - step * dx);
      r_trial = sys.residual(trial, false);
      if (r_trial.allFinite() && r_trial.lpNorm<Eigen::Infinity>() <= rep.mismatch) break;
      step *= 0.5;
    }
    state = std::move(trial);
    r = std::move(r_trial);
    rep.mismatch = r.allFinite() ? r.lpNorm<Eigen::Infinity>() : HUGE_VAL;
    ++rep.iterations;
    if (!std::isfinite(rep.mismatch)) break;
  }
  if (!(rep.mismatch <= tolerance)) {
    std::ostringstream msg;
    msg << "Galerkin power flow did not converge after " << rep.iterations << " iterations (mismatch "
        << rep.mismatch << ")";
    fail(ErrorKind::NonConvergence, msg.str());
  }
  return rep;
}

}  // namespace spice
