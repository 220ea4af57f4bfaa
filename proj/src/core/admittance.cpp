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

#include "admittance.hpp"

#include <vector>

namespace spice {

BranchAdmittance branch_admittance(const Branch& br) {
  const std::complex<double> ys = br.series_admittance;
  const std::complex<double> ytt = ys + std::complex<double>(0.0, br.charging / 2.0);
  const std::complex<double> tau = std::polar(br.tap, br.shift);
  return BranchAdmittance{ytt / (br.tap * br.tap), -ys / std::conj(tau), -ys / tau, ytt};
}

AdmittanceMatrix build_admittance(const Network& net) {
  const auto n = static_cast<Eigen::Index>(net.num_buses());
  std::vector<Eigen::Triplet<double>> g, b;
  g.reserve(4 * net.num_branches() + n);
  b.reserve(4 * net.num_branches() + n);
  auto add = [&](std::size_t r, std::size_t c, std::complex<double> y) {
    g.emplace_back(static_cast<int>(r), static_cast<int>(c), y.real());
    b.emplace_back(static_cast<int>(r), static_cast<int>(c), y.imag());
  };
  for (const Branch& br : net.branches) {
    const std::size_t f = net.bus_index(br.from_bus);
    const std::size_t t = net.bus_index(br.to_bus);
    const BranchAdmittance y = branch_admittance(br);
    add(f, f, y.yff);
    add(f, t, y.yft);
    add(t, f, y.ytf);
    add(t, t, y.ytt);
  }
  // Diagonal always present so the pattern is adjacency plus diagonal.
  for (std::size_t i = 0; i < net.num_buses(); ++i) add(i, i, {net.buses[i].g_shunt, net.buses[i].b_shunt});

  AdmittanceMatrix y;
  y.G.resize(n, n);
  y.B.resize(n, n);
  y.G.setFromTriplets(g.begin(), g.end());
  y.B.setFromTriplets(b.begin(), b.end());
  y.G.makeCompressed();
  y.B.makeCompressed();
  return y;
}

}  // namespace spice
