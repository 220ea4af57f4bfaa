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

#include "polynomials.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "error.hpp"

namespace spice {

std::string_view to_string(PolynomialFamily f) {
  return f == PolynomialFamily::LegendreNormalized ? "legendre_normalized" : "hermite_probabilists_normalized";
}

PolynomialFamily family_from_string(std::string_view s) {
  if (s == "legendre_normalized") return PolynomialFamily::LegendreNormalized;
  if (s == "hermite_probabilists_normalized" || s == "hermite_normalized") return PolynomialFamily::HermiteNormalized;
  fail(ErrorKind::Parse, "unknown polynomial family '" + std::string(s) + "'");
}

PolynomialFamily family_for(Distribution d) {
  return d == Distribution::NormalizedUniform ? PolynomialFamily::LegendreNormalized
                                              : PolynomialFamily::HermiteNormalized;
}

double recurrence_beta(PolynomialFamily f, int m) {
  const auto mm = static_cast<double>(m);
  if (f == PolynomialFamily::HermiteNormalized) return mm;
  return 3.0 * mm * mm / (4.0 * mm * mm - 1.0);
}

void evaluate_univariate(PolynomialFamily f, double x, std::span<double> out) {
  if (out.empty()) return;
  out[0] = 1.0;
  if (out.size() == 1) return;
  double b_prev = 0.0;
  for (std::size_t m = 0; m + 1 < out.size(); ++m) {
    const double b_next = std::sqrt(recurrence_beta(f, static_cast<int>(m) + 1));
    const double prev = m == 0 ? 0.0 : out[m - 1];
    out[m + 1] = (x * out[m] - b_prev * prev) / b_next;
    b_prev = b_next;
  }
}

double evaluate_univariate(PolynomialFamily f, int degree, double x) {
  std::vector<double> v(static_cast<std::size_t>(degree) + 1);
  evaluate_univariate(f, x, v);
  return v.back();
}

GaussRule gauss_rule(PolynomialFamily f, int points) {
  if (points < 1) fail(ErrorKind::Config, "quadrature needs at least one point");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(points, points);
  for (int m = 1; m < points; ++m) {
    const double b = std::sqrt(recurrence_beta(f, m));
    jacobi(m - 1, m) = b;
    jacobi(m, m - 1) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  GaussRule rule;
  std::vector<int> order(static_cast<std::size_t>(points));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return eig.eigenvalues()(a) < eig.eigenvalues()(b); });
  for (int idx : order) {
    rule.nodes.push_back(eig.eigenvalues()(idx));
    const double v0 = eig.eigenvectors()(0, idx);
    rule.weights.push_back(v0 * v0);
  }
  return rule;
}

int quadrature_points_for_degree(int integrand_degree) { return (integrand_degree + 2) / 2 + 1; }

}  // namespace spice
