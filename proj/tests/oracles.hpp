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

// Reference computations shared by the unit tests and the acceptance runner.
// None of them call the library's quadrature, basis or admittance code.
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "network.hpp"

namespace oracle {

using cplx = std::complex<double>;

inline std::string case_path(const std::string& name) { return std::string(SPICE_DATA_DIR) + "/cases/" + name; }

// Tiny xorshift generator for property tests.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : s_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}
  std::uint64_t next() {
    s_ ^= s_ << 13;
    s_ ^= s_ >> 7;
    s_ ^= s_ << 17;
    return s_;
  }
  double uniform(double lo = 0.0, double hi = 1.0) {
    return lo + (hi - lo) * (static_cast<double>(next() >> 11) * 0x1.0p-53);
  }
  int integer(int lo, int hi) { return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1)); }

 private:
  std::uint64_t s_;
};

// ---- univariate orthonormal polynomials, written out from their definitions ----

// Legendre P_m on [-1, 1] by Bonnet's recursion.
inline double legendre(int m, double x) {
  double p0 = 1.0, p1 = x;
  if (m == 0) return p0;
  for (int k = 1; k < m; ++k) {
    const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

// Probabilists' Hermite He_m.
inline double hermite(int m, double x) {
  double h0 = 1.0, h1 = x;
  if (m == 0) return h0;
  for (int k = 1; k < m; ++k) {
    const double h2 = x * h1 - k * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

inline double factorial(int m) {
  double f = 1.0;
  for (int k = 2; k <= m; ++k) f *= k;
  return f;
}

// Orthonormal under uniform(-sqrt3, sqrt3) and standard normal respectively.
inline double psi_uniform(int m, double x) { return std::sqrt(2.0 * m + 1.0) * legendre(m, x / std::sqrt(3.0)); }
inline double psi_gauss(int m, double x) { return hermite(m, x) / std::sqrt(factorial(m)); }

struct Rule {
  std::vector<double> x, w;  // weights sum to one
};

// Gauss-Legendre by Newton on P_n, mapped to uniform(-sqrt3, sqrt3).
inline Rule gauss_uniform(int n) {
  Rule r;
  for (int i = 1; i <= n; ++i) {
    double x = std::cos(std::numbers::pi * (i - 0.25) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      const double p = legendre(n, x), pm = legendre(n - 1, x);
      dp = n * (x * p - pm) / (x * x - 1.0);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double pm = legendre(n - 1, x), p = legendre(n, x);
    dp = n * (x * p - pm) / (x * x - 1.0);
    r.x.push_back(std::sqrt(3.0) * x);
    r.w.push_back(1.0 / ((1.0 - x * x) * dp * dp));  // 2/((1-x^2)P'^2) halved for the uniform density
  }
  return r;
}

// Gauss-Hermite (probabilists') nodes by bracketing sign changes of He_n on
// a fine grid, then bisection.
inline Rule gauss_normal(int n) {
  Rule r;
  const double bound = 2.0 * std::sqrt(static_cast<double>(n)) + 2.0;
  const int steps = 20001;  // odd, so no grid point sits on the origin
  double a = -bound, ha = hermite(n, a);
  for (int s = 1; s <= steps; ++s) {
    const double b = -bound + 2.0 * bound * s / steps, hb = hermite(n, b);
    if ((ha < 0.0) != (hb < 0.0)) {
      double lo = a, hi = b;
      for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((hermite(n, lo) < 0.0) == (hermite(n, mid) < 0.0)) lo = mid; else hi = mid;
      }
      const double x = 0.5 * (lo + hi), hm = hermite(n - 1, x);
      r.x.push_back(x);
      r.w.push_back(factorial(n) / (n * n * hm * hm));
    }
    a = b;
    ha = hb;
  }
  return r;
}

// Tensor rule over n dimensions: calls fn(point, weight).
inline void tensor_rule(const Rule& r, int n, const std::function<void(const std::vector<double>&, double)>& fn) {
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  std::vector<double> pt(static_cast<std::size_t>(n));
  const int m = static_cast<int>(r.x.size());
  while (true) {
    double w = 1.0;
    for (int d = 0; d < n; ++d) {
      pt[static_cast<std::size_t>(d)] = r.x[static_cast<std::size_t>(idx[static_cast<std::size_t>(d)])];
      w *= r.w[static_cast<std::size_t>(idx[static_cast<std::size_t>(d)])];
    }
    fn(pt, w);
    int d = 0;
    while (d < n && ++idx[static_cast<std::size_t>(d)] == m) idx[static_cast<std::size_t>(d++)] = 0;
    if (d == n) break;
  }
}

// Product basis function for a multi-index.
inline double psi(const std::vector<int>& alpha, const std::vector<double>& xi, bool gaussian) {
  double v = 1.0;
  for (std::size_t d = 0; d < alpha.size(); ++d)
    v *= gaussian ? psi_gauss(alpha[d], xi[d]) : psi_uniform(alpha[d], xi[d]);
  return v;
}

// ---- complex-arithmetic power flow ----

// Dense complex bus admittance assembled straight from the branch data
// (pi model, tap on the from side) and bus shunts.
inline std::vector<std::vector<cplx>> ybus(const spice::Network& net) {
  const std::size_t n = net.num_buses();
  std::vector<std::vector<cplx>> y(n, std::vector<cplx>(n, 0.0));
  for (const spice::Branch& br : net.branches) {
    const std::size_t f = net.bus_index(br.from_bus), t = net.bus_index(br.to_bus);
    const cplx ys = br.series_admittance;
    const cplx half_b(0.0, br.charging / 2.0);
    const cplx tap = std::polar(br.tap, br.shift);
    y[f][f] += (ys + half_b) / (tap * std::conj(tap));
    y[f][t] += -ys / std::conj(tap);
    y[t][f] += -ys / tap;
    y[t][t] += ys + half_b;
  }
  for (std::size_t i = 0; i < n; ++i) y[i][i] += cplx(net.buses[i].g_shunt, net.buses[i].b_shunt);
  return y;
}

// S_i = V_i conj(sum_j Y_ij V_j).
inline std::vector<cplx> power(const std::vector<std::vector<cplx>>& y, const std::vector<cplx>& v) {
  std::vector<cplx> s(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    cplx cur = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) cur += y[i][j] * v[j];
    s[i] = v[i] * std::conj(cur);
  }
  return s;
}

// ---- toy networks ----

// Slack 1 at 1.0 pu feeding PQ bus 2 through a lossless line z = j0.1.
inline spice::Network two_bus(double load_p, double load_q, double v_set = 1.0) {
  spice::Bus b1;
  b1.id = 1;
  b1.kind = spice::BusKind::Slack;
  b1.nominal_v = v_set;
  spice::Bus b2;
  b2.id = 2;
  b2.kind = spice::BusKind::PQ;
  spice::Branch br;
  br.from_bus = 1;
  br.to_bus = 2;
  br.series_admittance = {0.0, -10.0};
  spice::Generator g;
  g.bus = 1;
  g.v_nom = v_set;
  g.p_min = -10.0;
  g.p_max = 10.0;
  g.q_min = -10.0;
  g.q_max = 10.0;
  std::vector<spice::Load> loads;
  if (load_p != 0.0 || load_q != 0.0) loads.push_back({2, load_p, load_q});
  return spice::make_network({b1, b2}, {br}, {g}, loads);
}

// High-voltage solution of two_bus with v_set = 1: with S2 = -(load),
// P2 = 10 f and Q2 = 10 (e^2 + f^2 - e).
inline cplx two_bus_voltage(double load_p, double load_q) {
  const double f = -load_p / 10.0;
  const double c = f * f + load_q / 10.0;
  return {0.5 * (1.0 + std::sqrt(1.0 - 4.0 * c)), f};
}

}  // namespace oracle
