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
#include <sstream>

#include "admittance.hpp"
#include "coefficient_io.hpp"
#include "doctest.h"
#include "error.hpp"
#include "galerkin.hpp"
#include "oracles.hpp"
#include "spice_solver.hpp"
#include "uq.hpp"

using namespace spice;

namespace {

struct Setup {
  Network net;
  UncertaintyModel model;
  std::shared_ptr<const AdmittanceMatrix> y;
  std::shared_ptr<const PceBasis> basis;
};

Setup setup(Network net, int areas, double eps, int degree = 2,
            Distribution dist = Distribution::NormalizedUniform) {
  Setup s;
  s.net = std::move(net);
  s.model = make_uncertainty(s.net, areas, eps, dist);
  s.y = std::make_shared<AdmittanceMatrix>(build_admittance(s.net));
  s.basis = make_basis(s.model, degree);
  return s;
}

Setup setup_case(const char* name, int areas, double eps, int degree = 2) {
  return setup(load_case(oracle::case_path(name)), areas, eps, degree);
}

Network two_generators() {
  const Network base = oracle::two_bus(2.0, 0.0);
  std::vector<Bus> buses = base.buses;
  Bus b3;
  b3.id = 3;
  b3.kind = BusKind::PV;
  buses.push_back(b3);
  std::vector<Branch> branches = base.branches;
  Branch br;
  br.from_bus = 2;
  br.to_bus = 3;
  br.series_admittance = {0.0, -10.0};
  branches.push_back(br);
  std::vector<Generator> gens = base.generators;
  Generator g2 = gens[0];
  g2.bus = 3;
  gens.push_back(g2);
  return make_network(buses, branches, gens, base.loads);
}

CoefficientState random_coefficients(std::size_t n, std::size_t k, oracle::Rng& rng) {
  CoefficientState s{Eigen::MatrixXd(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k)),
                     Eigen::MatrixXd(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k))};
  for (Eigen::Index i = 0; i < s.v_re.rows(); ++i)
    for (Eigen::Index c = 0; c < s.v_re.cols(); ++c) {
      s.v_re(i, c) = c == 0 ? rng.uniform(0.9, 1.1) : rng.uniform(-0.05, 0.05);
      s.v_im(i, c) = c == 0 ? rng.uniform(-0.2, 0.2) : rng.uniform(-0.05, 0.05);
    }
  return s;
}

double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("overloaded injections: zero uncertainty and the single-load value") {
  {
    const Setup s = setup_case("case30.m", 3, 0.0);
    Eigen::MatrixXd p, q;
    overload_injections(s.net, s.model, *s.basis, p, q);
    CHECK(p.rightCols(p.cols() - 1).cwiseAbs().maxCoeff() == 0.0);
    CHECK(q.rightCols(q.cols() - 1).cwiseAbs().maxCoeff() == 0.0);
  }
  {
    const Setup s = setup(oracle::two_bus(1.0, 0.5), 1, 0.03);
    Eigen::MatrixXd p, q;
    overload_injections(s.net, s.model, *s.basis, p, q);
    CHECK(p(1, 1) == doctest::Approx(-0.03).epsilon(1e-14));
    CHECK(q(1, 1) == doctest::Approx(-0.015).epsilon(1e-14));
    CHECK(p(1, 0) == doctest::Approx(-1.0));
  }
}

TEST_CASE("overloaded injections: two generators share the area coefficient") {
  const Setup s = setup(two_generators(), 1, 0.03);
  Eigen::MatrixXd p, q;
  overload_injections(s.net, s.model, *s.basis, p, q);
  // Load 2.0 gives a total coefficient of 0.06 on the area index.
  CHECK(p(0, 1) == doctest::Approx(0.03).epsilon(1e-14));
  CHECK(p(2, 1) == doctest::Approx(0.03).epsilon(1e-14));
  CHECK(p(1, 1) == doctest::Approx(-0.06).epsilon(1e-14));
}

TEST_CASE("overloaded injections scale linearly with epsilon") {
  const Setup a = setup_case("case118.m", 5, 0.02), b = setup_case("case118.m", 5, 0.04);
  Eigen::MatrixXd pa, qa, pb, qb;
  overload_injections(a.net, a.model, *a.basis, pa, qa);
  overload_injections(b.net, b.model, *b.basis, pb, qb);
  const Eigen::Index k1 = static_cast<Eigen::Index>(a.basis->index_set().count_up_to_degree(1));
  CHECK((pb.middleCols(1, k1 - 1) - 2.0 * pa.middleCols(1, k1 - 1)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((qb.middleCols(1, k1 - 1) - 2.0 * qa.middleCols(1, k1 - 1)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("projected power equals quadrature of the complex power of V(xi)") {
  for (Distribution dist : {Distribution::NormalizedUniform, Distribution::NormalizedGaussian}) {
    const Setup s = setup(load_case(oracle::case_path("case9.m")), 2, 0.05, 2, dist);
    const GalerkinSystem sys = make_galerkin_system(s.net, s.y, s.model, s.basis);
    oracle::Rng rng(17);
    const CoefficientState c = random_coefficients(s.net.num_buses(), s.basis->size(), rng);
    Eigen::MatrixXd p, q;
    sys.project_power(c, false, p, q);

    const bool gaussian = dist == Distribution::NormalizedGaussian;
    const oracle::Rule rule = gaussian ? oracle::gauss_normal(5) : oracle::gauss_uniform(5);
    const auto yc = oracle::ybus(s.net);
    Eigen::MatrixXd pr = Eigen::MatrixXd::Zero(p.rows(), p.cols()), qr = pr;
    oracle::tensor_rule(rule, 2, [&](const std::vector<double>& xi, double w) {
      std::vector<double> psi(s.basis->size());
      for (std::size_t k = 0; k < psi.size(); ++k) psi[k] = oracle::psi(s.basis->index_set()[k], xi, gaussian);
      std::vector<oracle::cplx> v(s.net.num_buses());
      for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t k = 0; k < psi.size(); ++k)
          v[i] += oracle::cplx(c.v_re(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)),
                               c.v_im(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k))) * psi[k];
      const auto sp = oracle::power(yc, v);
      for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t k = 0; k < psi.size(); ++k) {
          pr(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) += w * sp[i].real() * psi[k];
          qr(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) += w * sp[i].imag() * psi[k];
        }
    });
    CHECK(max_abs_diff(p, pr) < 1e-10);
    CHECK(max_abs_diff(q, qr) < 1e-10);
  }
}

TEST_CASE("degree-2 residual Jacobian matches central differences") {
  const Setup s = setup_case("case9.m", 2, 0.05);
  const GalerkinSystem sys = make_galerkin_system(s.net, s.y, s.model, s.basis);
  oracle::Rng rng(23);
  for (bool truncate : {false, true}) {
    const CoefficientState c = random_coefficients(s.net.num_buses(), s.basis->size(), rng);
    const Eigen::VectorXd x = sys.pack(c);
    const Eigen::MatrixXd j(sys.jacobian(c, truncate));
    Eigen::MatrixXd fd(sys.size(), sys.size());
    const double h = 1e-6;
    for (Eigen::Index col = 0; col < sys.size(); ++col) {
      Eigen::VectorXd xp = x, xm = x;
      xp(col) += h;
      xm(col) -= h;
      fd.col(col) = (sys.residual(sys.unpack(xp), truncate) - sys.residual(sys.unpack(xm), truncate)) / (2.0 * h);
    }
    CHECK(max_abs_diff(fd, j) / j.cwiseAbs().maxCoeff() <= 1e-6);

    // Column-restricted Jacobian is the matching column subset.
    std::vector<Eigen::Index> map(static_cast<std::size_t>(sys.size()), -1);
    Eigen::Index next = 0;
    for (Eigen::Index col = 0; col < sys.size(); col += 3) map[static_cast<std::size_t>(col)] = next++;
    const Eigen::MatrixXd jr(sys.jacobian(c, truncate, map, next));
    for (Eigen::Index col = 0; col < sys.size(); ++col)
      if (map[static_cast<std::size_t>(col)] >= 0) CHECK(max_abs_diff(jr.col(map[static_cast<std::size_t>(col)]), j.col(col)) == 0.0);
  }
}

TEST_CASE("pair counts for n = 10") {
  const MultiIndexSet set = build_index_set(10, 2);
  CHECK(full_pair_count(set) == 4356);
  CHECK(truncated_pair_count(set) == 4356 - 55 * 55);
  const std::size_t k1 = set.count_up_to_degree(1);
  CHECK(truncated_pair_count(set) <= 2 * k1 * set.size());
}

TEST_CASE("zero uncertainty: the deterministic solution zeroes the residual") {
  const Setup s = setup_case("case30.m", 3, 0.0);
  const SpiceResult r = run_spice(s.net, s.model, SpiceConfig{});
  const Eigen::Index k = static_cast<Eigen::Index>(s.basis->size());
  for (Variable v : kAllVariables) CHECK(r.coefficients[v].rightCols(k - 1).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(max_abs_diff(r.coefficients.v_re.col(0), r.diagnostics.deterministic.state.v_re) < 1e-8);
  CHECK(max_abs_diff(r.coefficients.v_im.col(0), r.diagnostics.deterministic.state.v_im) < 1e-8);
  const GalerkinSystem sys = make_galerkin_system(s.net, s.y, s.model, s.basis);
  CHECK(sys.residual({r.coefficients.v_re, r.coefficients.v_im}, false).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(r.diagnostics.degree2.objective < 1e-16);
}

TEST_CASE("stage one equals the deterministic power flow exactly") {
  const Setup s = setup_case("case9.m", 3, 0.02);
  const SpiceResult r = run_spice(s.net, s.model, SpiceConfig{});
  const std::vector<double> xi(3, 0.0);
  const PfSpec spec = make_pf_spec(s.net, s.y, inject(s.net, s.model, xi));
  const PfResult pf = solve_pf(spec, flat_start(spec));
  CHECK(max_abs_diff(pf.state.v_re, r.diagnostics.deterministic.state.v_re) == 0.0);
  CHECK(max_abs_diff(pf.state.v_im, r.diagnostics.deterministic.state.v_im) == 0.0);
}

TEST_CASE("degree-1 coefficients match the derivative of the power flow") {
  const double eps = 1e-3;
  const Setup s = setup(oracle::two_bus(1.0, 0.3), 1, eps, 1);
  const PceCoefficients c = solve_degree1(s.net, s.y, s.model, s.basis,
                                          [&] {
                                            const std::vector<double> xi{0.0};
                                            const PfSpec spec = make_pf_spec(s.net, s.y, inject(s.net, s.model, xi));
                                            return solve_pf(spec, flat_start(spec)).state;
                                          }());
  const double h = 1e-4;
  auto solve_at = [&](double xi0) {
    const std::vector<double> xi{xi0};
    const PfSpec spec = make_pf_spec(s.net, s.y, inject(s.net, s.model, xi));
    return solve_pf(spec, flat_start(spec)).state;
  };
  const VoltageState plus = solve_at(h), minus = solve_at(-h);
  const double dre = (plus.v_re(1) - minus.v_re(1)) / (2.0 * h);
  const double dim = (plus.v_im(1) - minus.v_im(1)) / (2.0 * h);
  CHECK(std::abs(c.v_re(1, 1) - dre) <= 1e-4 * std::abs(dre));
  CHECK(std::abs(c.v_im(1, 1) - dim) <= 1e-4 * std::abs(dim));
}

TEST_CASE("mask rule on a hand-made degree-1 vector") {
  const std::shared_ptr<const PceBasis> basis =
      std::make_shared<PceBasis>(build_index_set(3, 2), PolynomialFamily::LegendreNormalized);
  PceCoefficients c;
  c.basis = basis;
  for (Variable v : kAllVariables) c[v] = Eigen::MatrixXd::Zero(1, static_cast<Eigen::Index>(basis->size()));
  c.v_re(0, 1) = 1.0;
  c.v_re(0, 2) = 1e-9;
  c.v_re(0, 3) = 1.0;
  const MultiIndexSet& set = basis->index_set();
  {
    const SparsityMask m = build_mask(c, set, 1e-10);
    CHECK(m.keep(Variable::VRe, 0, set.pair(0, 1)));  // 1e-9 * 1 is not below 1e-10
    CHECK(m.keep(Variable::VRe, 0, set.pair(1, 2)));
    CHECK_FALSE(m.keep(Variable::VRe, 0, set.pair(1, 1)));  // 1e-18
  }
  {
    const SparsityMask m = build_mask(c, set, 1e-8);
    CHECK_FALSE(m.keep(Variable::VRe, 0, set.pair(0, 1)));
    CHECK_FALSE(m.keep(Variable::VRe, 0, set.pair(1, 2)));
    CHECK(m.keep(Variable::VRe, 0, set.pair(0, 2)));
    CHECK(m.keep(Variable::VRe, 0, set.pair(0, 0)));
  }
}

TEST_CASE("cutoff extremes and monotone sparsity") {
  const Setup s = setup_case("case30.m", 4, 0.01);
  SpiceConfig cfg;
  cfg.c_off = 0.0;
  CHECK(run_spice(s.net, s.model, cfg).diagnostics.sparsity == 0.0);
  cfg.c_off = 1e300;
  const SpiceResult all = run_spice(s.net, s.model, cfg);
  CHECK(all.diagnostics.sparsity == 1.0);
  double previous = 0.0;
  for (double c_off : {0.0, 1e-14, 1e-12, 1e-10, 1e-8, 1e-6, 1e-4, 1e-2, 1.0}) {
    cfg.c_off = c_off;
    const double sp = run_spice(s.net, s.model, cfg).diagnostics.sparsity;
    CHECK(sp >= previous);
    previous = sp;
  }
}

TEST_CASE("default cutoff gives positive sparsity on a multi-area case") {
  const Setup s = setup_case("case9.m", 3, 0.01);
  const SpiceResult r = run_spice(s.net, s.model, SpiceConfig{});
  CHECK(r.diagnostics.sparsity > 0.0);
  // Masked coefficients stay exactly zero.
  const Eigen::Index k = static_cast<Eigen::Index>(s.basis->size());
  for (Variable v : kAllVariables)
    for (std::size_t i = 0; i < s.net.num_buses(); ++i)
      for (Eigen::Index c = 0; c < k; ++c)
        if (!r.mask.keep(v, i, static_cast<std::size_t>(c)))
          CHECK(r.coefficients[v](static_cast<Eigen::Index>(i), c) == 0.0);
}

TEST_CASE("least squares: zero uncertainty keeps the warm start") {
  const Setup s = setup_case("case9.m", 2, 0.0);
  const GalerkinSystem sys = make_galerkin_system(s.net, s.y, s.model, s.basis);
  const std::vector<double> xi(2, 0.0);
  const PfSpec spec = make_pf_spec(s.net, s.y, inject(s.net, s.model, xi));
  const PfResult pf = solve_pf(spec, flat_start(spec));
  CoefficientState warm{Eigen::MatrixXd::Zero(9, 6), Eigen::MatrixXd::Zero(9, 6)};
  warm.v_re.col(0) = pf.state.v_re;
  warm.v_im.col(0) = pf.state.v_im;
  const CoefficientState before = warm;
  const SparsityMask mask(9, s.basis->index_set());
  const LeastSquaresReport rep = solve_degree2(sys, mask, true, SpiceConfig{}, warm);
  CHECK(rep.objective < 1e-20);
  CHECK(max_abs_diff(warm.v_re, before.v_re) < 1e-12);
  CHECK(max_abs_diff(warm.v_im, before.v_im) < 1e-12);
}

TEST_CASE("least squares on a square system reaches the full solution") {
  const Setup s = setup_case("case9.m", 2, 0.05);
  const GalerkinSystem sys = make_galerkin_system(s.net, s.y, s.model, s.basis);
  const PceCoefficients full = solve_full_pce(s.net, s.model, 2);
  CHECK(sys.residual({full.v_re, full.v_im}, false).cwiseAbs().maxCoeff() <= 1e-8);

  SpiceConfig cfg;
  cfg.c_off = 0.0;
  cfg.truncate_quartic = false;
  const SpiceResult r = run_spice(s.net, s.model, cfg);
  CHECK(r.diagnostics.degree2.objective <= 1e-12);
  const auto& hist = r.diagnostics.degree2.history;
  for (std::size_t i = 1; i < hist.size(); ++i) CHECK(hist[i] <= hist[i - 1]);
  for (Variable v : kAllVariables) CHECK(max_abs_diff(r.coefficients[v], full[v]) <= 1e-6);
}

TEST_CASE("objective history is non-increasing on larger cases") {
  const Setup s = setup_case("case118.m", 5, 0.03);
  const SpiceResult r = run_spice(s.net, s.model, SpiceConfig{});
  const auto& hist = r.diagnostics.degree2.history;
  REQUIRE(hist.size() >= 2);
  for (std::size_t i = 1; i < hist.size(); ++i) CHECK(hist[i] <= hist[i - 1]);
  CHECK(r.diagnostics.degree2.converged);
}

TEST_CASE("Galerkin consistency stays at its recorded baseline") {
  // Baselines measured with the default configuration; regressions beyond
  // a factor of four fail.
  struct Baseline {
    const char* name;
    int areas;
    double eps;
    double consistency;
  };
  for (const Baseline& b : {Baseline{"case9.m", 3, 0.01, 3.5e-11}, Baseline{"case118.m", 5, 0.03, 7.3e-7}}) {
    const Setup s = setup_case(b.name, b.areas, b.eps);
    const SpiceResult r = run_spice(s.net, s.model, SpiceConfig{});
    CHECK(r.diagnostics.consistency <= 4.0 * b.consistency);
    CHECK(r.diagnostics.consistency <= 1e-4 * r.diagnostics.injection_scale);
  }
}

TEST_CASE("sample mean of the evaluated polynomial equals the mean coefficient") {
  const Setup s = setup_case("case9.m", 3, 0.05);
  const SpiceResult r = run_spice(s.net, s.model, SpiceConfig{});
  const SampleBatch batch = sample(s.model, 20000, 5);
  for (Variable v : {Variable::VRe, Variable::VIm}) {
    const Eigen::MatrixXd vals = evaluate_variable(*s.basis, r.coefficients[v], batch.samples);
    for (Eigen::Index i = 0; i < vals.cols(); ++i) {
      const double mean = vals.col(i).mean();
      const double sd = std::sqrt((vals.col(i).array() - mean).square().sum() / static_cast<double>(vals.rows() - 1));
      const double se = sd / std::sqrt(static_cast<double>(vals.rows()));
      CHECK(std::abs(mean - r.coefficients[v](i, 0)) <= std::max(4.0 * se, 1e-14));
    }
  }
}

TEST_CASE("coefficient file round trip is exact") {
  const Setup s = setup_case("case9.m", 3, 0.02);
  const SpiceResult r = run_spice(s.net, s.model, SpiceConfig{});
  CoefficientFile file{network_hash(s.net), {}, r.coefficients};
  for (const Bus& b : s.net.buses) file.bus_ids.push_back(b.id);
  std::stringstream ss;
  write_coefficients(ss, file);
  const CoefficientFile back = read_coefficients(ss);
  CHECK(back.case_hash == file.case_hash);
  CHECK(back.bus_ids == file.bus_ids);
  CHECK(back.coefficients.basis->family() == s.basis->family());
  for (Variable v : kAllVariables) CHECK(back.coefficients[v] == r.coefficients[v]);
  const SampleBatch batch = sample(s.model, 500, 3);
  for (Variable v : kAllVariables) {
    const Eigen::MatrixXd a = evaluate_variable(*s.basis, r.coefficients[v], batch.samples);
    const Eigen::MatrixXd b = evaluate_variable(*back.coefficients.basis, back.coefficients[v], batch.samples);
    CHECK(max_abs_diff(a, b) <= 1e-14);
  }
}

TEST_CASE("degree-1 runs write no degree-2 records") {
  const Setup s = setup_case("case9.m", 3, 0.02, 1);
  SpiceConfig cfg;
  cfg.degree = 1;
  const SpiceResult r = run_spice(s.net, s.model, cfg);
  CoefficientFile file{network_hash(s.net), {}, r.coefficients};
  for (const Bus& b : s.net.buses) file.bus_ids.push_back(b.id);
  std::stringstream ss;
  write_coefficients(ss, file);
  std::string line;
  int records = 0;
  bool in_records = false;
  while (std::getline(ss, line)) {
    if (line.rfind("records", 0) == 0) {
      in_records = true;
      continue;
    }
    if (!in_records) continue;
    std::istringstream ls(line);
    std::string var;
    int bus = 0, a = 0, b = 0, c = 0;
    ls >> var >> bus >> a >> b >> c;
    CHECK(a + b + c <= 1);
    ++records;
  }
  CHECK(records > 0);
}

TEST_CASE("malformed coefficient files report the line") {
  std::stringstream ss("spice-coefficients 1\ncase_hash 0\nfamily legendre_normalized\ndimension 2\ndegree 2\n"
                       "ordering graded-lex-desc\nbuses 1 1\nrecords 1\nv_re 1 0 x 1.0\n");
  try {
    read_coefficients(ss);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Parse);
    CHECK(std::string(e.what()).find("line 9") != std::string::npos);
  }
}
