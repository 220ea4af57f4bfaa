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
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "pce_basis.hpp"
#include "polynomials.hpp"
#include "rng.hpp"

using namespace spice;

namespace {

bool is_gaussian(PolynomialFamily f) { return f == PolynomialFamily::HermiteNormalized; }

oracle::Rule rule_for(PolynomialFamily f, int points) {
  return is_gaussian(f) ? oracle::gauss_normal(points) : oracle::gauss_uniform(points);
}

// <prod of the listed basis functions> by the independent tensor quadrature.
double expect(const PceBasis& basis, const std::vector<std::size_t>& ks) {
  const int n = basis.dimension();
  const oracle::Rule r = rule_for(basis.family(), 6);
  double acc = 0.0;
  oracle::tensor_rule(r, n, [&](const std::vector<double>& x, double w) {
    double v = w;
    for (std::size_t k : ks) v *= oracle::psi(basis.index_set()[k], x, is_gaussian(basis.family()));
    acc += v;
  });
  return acc;
}

}  // namespace

TEST_CASE("index-set sizes follow the binomial count") {
  CHECK(build_index_set(10, 2).size() == 66);
  CHECK(build_index_set(5, 0).size() == 1);
  CHECK(build_index_set(3, 2).size() == 10);
  for (int n = 1; n <= 12; ++n)
    for (int d = 0; d <= 3; ++d)
      CHECK(build_index_set(n, d).size() == binomial(static_cast<std::size_t>(n + d), static_cast<std::size_t>(d)));
}

TEST_CASE("graded ordering for n = 2, deg = 2") {
  const MultiIndexSet s = build_index_set(2, 2);
  const std::vector<MultiIndex> expected{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
  REQUIRE(s.size() == expected.size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    CHECK(s[k] == expected[k]);
    CHECK(s.find(expected[k]) == k);
  }
  CHECK(s.count_up_to_degree(1) == 3);
  CHECK(s.unit(1) == 2);
  CHECK(s.pair(0, 1) == 4);
}

TEST_CASE("basis evaluation spot values") {
  for (PolynomialFamily f : {PolynomialFamily::LegendreNormalized, PolynomialFamily::HermiteNormalized}) {
    const PceBasis basis(build_index_set(3, 2), f);
    const std::vector<double> xi{0.3, -1.2, 0.7};
    CHECK(basis.eval(0, xi) == 1.0);
    for (int j = 0; j < 3; ++j)
      CHECK(basis.eval(basis.index_set().unit(j), xi) == doctest::Approx(xi[static_cast<std::size_t>(j)]).epsilon(1e-14));
  }
  const PceBasis herm(build_index_set(2, 2), PolynomialFamily::HermiteNormalized);
  const std::vector<double> zero{0.0, 0.0};
  CHECK(herm.eval(herm.index_set().find({2, 0}), zero) == doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("eval_all agrees with the explicit product formula") {
  oracle::Rng rng(5);
  for (PolynomialFamily f : {PolynomialFamily::LegendreNormalized, PolynomialFamily::HermiteNormalized}) {
    const PceBasis basis(build_index_set(4, 2), f);
    std::vector<double> out(basis.size()), scratch(4 * 3);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> xi(4);
      for (double& x : xi) x = rng.uniform(-1.7, 1.7);
      basis.eval_all(xi, out, scratch);
      for (std::size_t k = 0; k < basis.size(); ++k)
        CHECK(std::abs(out[k] - oracle::psi(basis.index_set()[k], xi, is_gaussian(f))) < 1e-13);
    }
  }
}

TEST_CASE("independent quadrature rules integrate moments exactly") {
  const oracle::Rule u = oracle::gauss_uniform(5), g = oracle::gauss_normal(5);
  double su = 0, s2u = 0, s4u = 0, sg = 0, s2g = 0, s4g = 0;
  for (std::size_t i = 0; i < 5; ++i) {
    su += u.w[i];
    s2u += u.w[i] * u.x[i] * u.x[i];
    s4u += u.w[i] * std::pow(u.x[i], 4);
    sg += g.w[i];
    s2g += g.w[i] * g.x[i] * g.x[i];
    s4g += g.w[i] * std::pow(g.x[i], 4);
  }
  CHECK(su == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(s2u == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(s4u == doctest::Approx(9.0 / 5.0).epsilon(1e-13));  // E[x^4] for uniform with unit variance
  CHECK(sg == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(s2g == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(s4g == doctest::Approx(3.0).epsilon(1e-13));
}

TEST_CASE("library Gauss rules match the independent ones") {
  for (int points = 1; points <= 6; ++points) {
    const GaussRule a = gauss_rule(PolynomialFamily::LegendreNormalized, points);
    const GaussRule b = gauss_rule(PolynomialFamily::HermiteNormalized, points);
    const oracle::Rule ra = oracle::gauss_uniform(points), rb = oracle::gauss_normal(points);
    auto sorted = [](std::vector<double> v) {
      std::sort(v.begin(), v.end());
      return v;
    };
    const auto an = sorted(a.nodes), bn = sorted(b.nodes), ran = sorted(ra.x), rbn = sorted(rb.x);
    REQUIRE(an.size() == ran.size());
    REQUIRE(bn.size() == rbn.size());
    for (std::size_t i = 0; i < an.size(); ++i) {
      CHECK(std::abs(an[i] - ran[i]) < 1e-12);
      CHECK(std::abs(bn[i] - rbn[i]) < 1e-11);
    }
  }
}

TEST_CASE("orthonormality against the quadrature oracle for n <= 4, deg <= 2") {
  for (PolynomialFamily f : {PolynomialFamily::LegendreNormalized, PolynomialFamily::HermiteNormalized}) {
    for (int n = 1; n <= 4; ++n)
      for (int d = 0; d <= 2; ++d) {
        const PceBasis basis(build_index_set(n, d), f);
        double off = 0.0, diag = 0.0;
        for (std::size_t l = 0; l < basis.size(); ++l) {
          CHECK(std::abs(basis.norms()[l] - 1.0) <= 1e-10);
          for (std::size_t k = 0; k < basis.size(); ++k) {
            const double v = expect(basis, {l, k});
            if (l == k) diag = std::max(diag, std::abs(v - 1.0));
            else off = std::max(off, std::abs(v));
          }
        }
        CHECK(off <= 1e-10);
        CHECK(diag <= 1e-10);
      }
  }
}

TEST_CASE("triple products: spot values and identity rows") {
  const PceBasis leg(build_index_set(1, 2), PolynomialFamily::LegendreNormalized);
  const PceBasis her(build_index_set(1, 2), PolynomialFamily::HermiteNormalized);
  CHECK(std::abs(leg.triple_value(1, 1, 2) - 2.0 / std::sqrt(5.0)) <= 1e-10);
  CHECK(std::abs(her.triple_value(1, 1, 2) - std::sqrt(2.0)) <= 1e-10);
  CHECK(std::abs(expect(leg, {1, 1, 2}) - 2.0 / std::sqrt(5.0)) <= 1e-10);
  CHECK(std::abs(expect(her, {1, 1, 2}) - std::sqrt(2.0)) <= 1e-10);
  const PceBasis b(build_index_set(3, 2), PolynomialFamily::LegendreNormalized);
  for (std::size_t k = 0; k < b.size(); ++k) CHECK(std::abs(b.triple_value(0, k, k) - 1.0) <= 1e-12);
}

TEST_CASE("full triple tensor equals the quadrature oracle entry by entry") {
  for (PolynomialFamily f : {PolynomialFamily::LegendreNormalized, PolynomialFamily::HermiteNormalized}) {
    const PceBasis basis(build_index_set(3, 2), f);
    double err = 0.0;
    for (std::size_t a = 0; a < basis.size(); ++a)
      for (std::size_t b = 0; b < basis.size(); ++b)
        for (std::size_t c = 0; c < basis.size(); ++c)
          err = std::max(err, std::abs(basis.triple_value(a, b, c) - expect(basis, {a, b, c})));
    CHECK(err <= 1e-10);
    // The sparse tensor holds exactly the nonzero entries.
    std::size_t nonzero = 0;
    for (std::size_t a = 0; a < basis.size(); ++a)
      for (std::size_t b = 0; b < basis.size(); ++b)
        for (std::size_t c = 0; c < basis.size(); ++c)
          if (std::abs(expect(basis, {a, b, c})) > 1e-12) ++nonzero;
    CHECK(basis.triple().nonzeros() == nonzero);
  }
}

TEST_CASE("quadruple products equal the quadrature oracle") {
  const PceBasis basis(build_index_set(2, 2), PolynomialFamily::HermiteNormalized);
  for (std::size_t a = 0; a < basis.size(); ++a)
    for (std::size_t b = 0; b < basis.size(); ++b)
      for (std::size_t c = 0; c < basis.size(); ++c)
        for (std::size_t d = 0; d < basis.size(); ++d)
          CHECK(std::abs(basis.quadruple_value(a, b, c, d) - expect(basis, {a, b, c, d})) <= 1e-10);
}

TEST_CASE("property: triple entries vanish outside the per-dimension selection rule") {
  oracle::Rng rng(3);
  for (int trial = 0; trial < 6; ++trial) {
    const int n = rng.integer(1, 5);
    const PolynomialFamily f = trial % 2 ? PolynomialFamily::HermiteNormalized : PolynomialFamily::LegendreNormalized;
    const PceBasis basis(build_index_set(n, 2), f);
    for (const TripleEntry& e : basis.triple().entries()) {
      const MultiIndex &a = basis.index_set()[e.k1], &b = basis.index_set()[e.k2], &c = basis.index_set()[e.k];
      for (int j = 0; j < n; ++j) {
        const int x = a[static_cast<std::size_t>(j)], y = b[static_cast<std::size_t>(j)], z = c[static_cast<std::size_t>(j)];
        CHECK((x + y + z) % 2 == 0);
        CHECK(z <= x + y);
        CHECK(x <= y + z);
        CHECK(y <= x + z);
      }
      // Symmetric in the two inputs.
      CHECK(basis.triple_value(e.k2, e.k1, e.k) == doctest::Approx(e.value).epsilon(1e-14));
    }
  }
}

TEST_CASE("Monte-Carlo estimate of a triple product lies within four standard errors") {
  const PceBasis basis(build_index_set(2, 2), PolynomialFamily::LegendreNormalized);
  const std::size_t m = 1000000;
  const std::size_t k1 = basis.index_set().unit(0), k2 = basis.index_set().pair(0, 1), k = basis.index_set().unit(1);
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const std::vector<double> xi{std::sqrt(3.0) * (2.0 * rng::uniform01(77, 2 * i) - 1.0),
                                 std::sqrt(3.0) * (2.0 * rng::uniform01(77, 2 * i + 1) - 1.0)};
    const double v = basis.eval(k1, xi) * basis.eval(k2, xi) * basis.eval(k, xi);
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / static_cast<double>(m);
  const double se = std::sqrt((sum2 / static_cast<double>(m) - mean * mean) / static_cast<double>(m));
  CHECK(std::abs(mean - basis.triple_value(k1, k2, k)) < 4.0 * se);
}
