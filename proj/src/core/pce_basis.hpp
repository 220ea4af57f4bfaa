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

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "polynomials.hpp"

namespace spice {

using MultiIndex = std::vector<int>;

std::size_t binomial(std::size_t n, std::size_t k);

// Total-degree multi-index set in graded order: ascending total degree, and
// within one degree lexicographically descending, e.g. for n = 2, deg = 2:
// (0,0) (1,0) (0,1) (2,0) (1,1) (0,2). Coefficient files rely on this order.
class MultiIndexSet {
 public:
  MultiIndexSet() = default;
  MultiIndexSet(int n, int deg);

  int dimension() const { return n_; }
  int degree() const { return deg_; }
  std::size_t size() const { return indices_.size(); }
  const MultiIndex& operator[](std::size_t k) const { return indices_[k]; }
  int total_degree(std::size_t k) const { return total_[k]; }

  // Number of leading indices with total degree <= d.
  std::size_t count_up_to_degree(int d) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t find(const MultiIndex& alpha) const;

  // Position of e_j, and of e_i + e_j (i <= j).
  std::size_t unit(int j) const { return 1 + static_cast<std::size_t>(j); }
  std::size_t pair(int i, int j) const;

 private:
  int n_ = 0;
  int deg_ = 0;
  std::vector<MultiIndex> indices_;
  std::vector<int> total_;
  std::map<MultiIndex, std::size_t> lookup_;
};

MultiIndexSet build_index_set(int n, int deg);

struct TripleEntry {
  std::uint32_t k1, k2, k;
  double value;
};

// Nonzero <Psi_k1 Psi_k2, Psi_k>, ordered by (k, k1, k2); both (k1,k2) orders are stored.
class TripleTensor {
 public:
  TripleTensor() = default;
  TripleTensor(std::vector<TripleEntry> entries, std::size_t outputs);

  const std::vector<TripleEntry>& entries() const { return entries_; }
  // Entries with output index k.
  std::span<const TripleEntry> row(std::size_t k) const {
    return {entries_.data() + offsets_[k], offsets_[k + 1] - offsets_[k]};
  }
  std::size_t nonzeros() const { return entries_.size(); }

 private:
  std::vector<TripleEntry> entries_;
  std::vector<std::size_t> offsets_;
};

struct QuadrupleEntry {
  std::uint32_t k[4];  // positions within the requested support
  double value;
};

// Orthonormal product basis Psi_k(xi) = prod_j psi_{alpha_j}(xi_j).
class PceBasis {
 public:
  PceBasis() = default;
  PceBasis(MultiIndexSet set, PolynomialFamily family);

  const MultiIndexSet& index_set() const { return set_; }
  PolynomialFamily family() const { return family_; }
  std::size_t size() const { return set_.size(); }
  int dimension() const { return set_.dimension(); }
  int degree() const { return set_.degree(); }

  double eval(std::size_t k, std::span<const double> xi) const;
  // All K basis values at xi; `scratch` must hold n * (deg + 1) doubles.
  void eval_all(std::span<const double> xi, std::span<double> out, std::span<double> scratch) const;

  // <Psi_k, Psi_k> by quadrature; 1 up to rounding.
  const std::vector<double>& norms() const { return norms_; }

  // Full triple tensor over the index set.
  const TripleTensor& triple() const { return triple_; }
  // Triple tensor restricted to (k1, k2, k) all in `support`; entries keep global indices.
  TripleTensor triple(std::span<const std::size_t> support) const;

  double triple_value(std::size_t k1, std::size_t k2, std::size_t k) const;
  double quadruple_value(std::size_t k1, std::size_t k2, std::size_t k3, std::size_t k4) const;

  // <Psi_a Psi_b Psi_c, Psi_d> over a support; refuses (ErrorKind::Limit)
  // when the support has more than `max_support` indices.
  std::vector<QuadrupleEntry> quadruple(std::span<const std::size_t> support, std::size_t max_support = 64) const;

 private:
  double univariate3(int a, int b, int c) const { return t3_[(a * p_ + b) * p_ + c]; }
  double univariate4(int a, int b, int c, int d) const { return t4_[((a * p_ + b) * p_ + c) * p_ + d]; }

  MultiIndexSet set_;
  PolynomialFamily family_ = PolynomialFamily::LegendreNormalized;
  int p_ = 1;  // deg + 1
  std::vector<double> t3_;
  std::vector<double> t4_;
  std::vector<double> norms_;
  TripleTensor triple_;
};

inline constexpr double kStructuralZero = 1e-13;

}  // namespace spice
