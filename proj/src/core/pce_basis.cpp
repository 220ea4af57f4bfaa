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

#include "pce_basis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "error.hpp"

namespace spice {

std::size_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

MultiIndexSet::MultiIndexSet(int n, int deg) : n_(n), deg_(deg) {
  if (n < 1) fail(ErrorKind::Config, "index set dimension must be >= 1");
  if (deg < 0) fail(ErrorKind::Config, "index set degree must be >= 0");
  MultiIndex alpha(static_cast<std::size_t>(n), 0);
  // Lexicographically descending compositions of `remaining` into positions pos..n-1.
  std::function<void(int, int, int)> compose = [&](int pos, int remaining, int total) {
    if (pos == n - 1) {
      alpha[static_cast<std::size_t>(pos)] = remaining;
      indices_.push_back(alpha);
      total_.push_back(total);
      return;
    }
    for (int v = remaining; v >= 0; --v) {
      alpha[static_cast<std::size_t>(pos)] = v;
      compose(pos + 1, remaining - v, total);
    }
  };
  for (int d = 0; d <= deg; ++d) compose(0, d, d);
  for (std::size_t k = 0; k < indices_.size(); ++k) lookup_.emplace(indices_[k], k);
}

std::size_t MultiIndexSet::count_up_to_degree(int d) const {
  return static_cast<std::size_t>(std::upper_bound(total_.begin(), total_.end(), d) - total_.begin());
}

std::size_t MultiIndexSet::find(const MultiIndex& alpha) const {
  auto it = lookup_.find(alpha);
  return it == lookup_.end() ? npos : it->second;
}

std::size_t MultiIndexSet::pair(int i, int j) const {
  if (i > j) std::swap(i, j);
  const auto n = static_cast<std::size_t>(n_);
  const auto ii = static_cast<std::size_t>(i);
  return 1 + n + ii * n - (ii * (ii - 1)) / 2 + static_cast<std::size_t>(j - i);
}

MultiIndexSet build_index_set(int n, int deg) { return MultiIndexSet(n, deg); }

TripleTensor::TripleTensor(std::vector<TripleEntry> entries, std::size_t outputs) : entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end(), [](const TripleEntry& a, const TripleEntry& b) {
    return std::tie(a.k, a.k1, a.k2) < std::tie(b.k, b.k1, b.k2);
  });
  offsets_.assign(outputs + 1, 0);
  for (const auto& e : entries_) ++offsets_[e.k + 1];
  std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
}

PceBasis::PceBasis(MultiIndexSet set, PolynomialFamily family)
    : set_(std::move(set)), family_(family), p_(set_.degree() + 1) {
  const int deg = set_.degree();
  const auto p = static_cast<std::size_t>(p_);

  // Univariate product tables by Gauss quadrature of exact order.
  auto tabulate = [&](int factors) {
    const GaussRule rule = gauss_rule(family_, quadrature_points_for_degree(factors * deg));
    std::vector<std::vector<double>> psi(rule.nodes.size(), std::vector<double>(p));
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) evaluate_univariate(family_, rule.nodes[q], psi[q]);
    std::size_t total = 1;
    for (int f = 0; f < factors; ++f) total *= p;
    std::vector<double> table(total, 0.0);
    for (std::size_t flat = 0; flat < total; ++flat) {
      double sum = 0.0;
      for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        double prod = rule.weights[q];
        std::size_t rest = flat;
        for (int f = 0; f < factors; ++f) {
          prod *= psi[q][rest % p];
          rest /= p;
        }
        sum += prod;
      }
      table[flat] = std::abs(sum) < kStructuralZero ? 0.0 : sum;
    }
    return table;
  };
  // Index layout of tabulate() is little-endian in the factor order; the
  // tables are symmetric so the accessor order does not matter.
  t3_ = tabulate(3);
  t4_ = tabulate(4);

  const GaussRule rule2 = gauss_rule(family_, quadrature_points_for_degree(2 * deg));
  std::vector<double> sq(p, 0.0);
  std::vector<double> psi(p);
  for (std::size_t q = 0; q < rule2.nodes.size(); ++q) {
    evaluate_univariate(family_, rule2.nodes[q], psi);
    for (std::size_t m = 0; m < p; ++m) sq[m] += rule2.weights[q] * psi[m] * psi[m];
  }
  norms_.resize(set_.size());
  for (std::size_t k = 0; k < set_.size(); ++k) {
    double v = 1.0;
    for (int a : set_[k]) v *= sq[static_cast<std::size_t>(a)];
    norms_[k] = v;
  }

  std::vector<std::size_t> all(set_.size());
  std::iota(all.begin(), all.end(), 0);
  triple_ = triple(all);
}

double PceBasis::eval(std::size_t k, std::span<const double> xi) const {
  const MultiIndex& alpha = set_[k];
  double v = 1.0;
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    if (alpha[j] != 0) v *= evaluate_univariate(family_, alpha[j], xi[j]);
  }
  return v;
}

void PceBasis::eval_all(std::span<const double> xi, std::span<double> out, std::span<double> scratch) const {
  const auto p = static_cast<std::size_t>(p_);
  const auto n = static_cast<std::size_t>(set_.dimension());
  for (std::size_t j = 0; j < n; ++j) evaluate_univariate(family_, xi[j], scratch.subspan(j * p, p));
  for (std::size_t k = 0; k < set_.size(); ++k) {
    const MultiIndex& alpha = set_[k];
    double v = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (alpha[j] != 0) v *= scratch[j * p + static_cast<std::size_t>(alpha[j])];
    }
    out[k] = v;
  }
}

double PceBasis::triple_value(std::size_t k1, std::size_t k2, std::size_t k) const {
  const MultiIndex &a = set_[k1], &b = set_[k2], &c = set_[k];
  double v = 1.0;
  for (std::size_t j = 0; j < a.size() && v != 0.0; ++j) v *= univariate3(a[j], b[j], c[j]);
  return v;
}

double PceBasis::quadruple_value(std::size_t k1, std::size_t k2, std::size_t k3, std::size_t k4) const {
  const MultiIndex &a = set_[k1], &b = set_[k2], &c = set_[k3], &d = set_[k4];
  double v = 1.0;
  for (std::size_t j = 0; j < a.size() && v != 0.0; ++j) v *= univariate4(a[j], b[j], c[j], d[j]);
  return v;
}

TripleTensor PceBasis::triple(std::span<const std::size_t> support) const {
  std::vector<TripleEntry> entries;
  for (std::size_t k : support) {
    for (std::size_t k1 : support) {
      for (std::size_t k2 : support) {
        const double v = triple_value(k1, k2, k);
        if (std::abs(v) >= kStructuralZero)
          entries.push_back({static_cast<std::uint32_t>(k1), static_cast<std::uint32_t>(k2),
                             static_cast<std::uint32_t>(k), v});
      }
    }
  }
  return TripleTensor(std::move(entries), set_.size());
}

std::vector<QuadrupleEntry> PceBasis::quadruple(std::span<const std::size_t> support, std::size_t max_support) const {
  const std::size_t s = support.size();
  if (s > max_support) {
    const double estimate = std::pow(static_cast<double>(s), 4.0);
    fail(ErrorKind::Limit, "quadruple product tensor over " + std::to_string(s) + " indices needs up to " +
                               std::to_string(static_cast<long long>(estimate)) + " entries (limit: support of " +
                               std::to_string(max_support) + ")");
  }
  std::vector<QuadrupleEntry> entries;
  for (std::uint32_t a = 0; a < s; ++a)
    for (std::uint32_t b = 0; b < s; ++b)
      for (std::uint32_t c = 0; c < s; ++c)
        for (std::uint32_t d = 0; d < s; ++d) {
          const double v = quadruple_value(support[a], support[b], support[c], support[d]);
          if (std::abs(v) >= kStructuralZero) entries.push_back({{a, b, c, d}, v});
        }
  return entries;
}

}  // namespace spice
