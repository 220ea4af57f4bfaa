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

#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "uncertainty.hpp"

namespace spice {

// Univariate polynomials orthonormal under the driver distribution:
//  - LegendreNormalized: uniform on [-sqrt(3), sqrt(3)], psi_m = sqrt(2m+1) P_m(x / sqrt(3))
//  - HermiteNormalized:  standard normal, psi_m = He_m(x) / sqrt(m!)
enum class PolynomialFamily { LegendreNormalized, HermiteNormalized };

std::string_view to_string(PolynomialFamily f);
PolynomialFamily family_from_string(std::string_view s);
PolynomialFamily family_for(Distribution d);

// Three-term recurrence x psi_m = b_{m+1} psi_{m+1} + b_m psi_{m-1}; returns b_m^2.
double recurrence_beta(PolynomialFamily f, int m);

// psi_0 .. psi_{out.size()-1} at x.
void evaluate_univariate(PolynomialFamily f, double x, std::span<double> out);
double evaluate_univariate(PolynomialFamily f, int degree, double x);

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // sum to 1
};

// Golub-Welsch; exact for polynomials of degree <= 2 * points - 1.
GaussRule gauss_rule(PolynomialFamily f, int points);

// Nodes needed to integrate a polynomial of the given degree exactly, plus one.
int quadrature_points_for_degree(int integrand_degree);

}  // namespace spice
