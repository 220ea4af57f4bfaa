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

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "network.hpp"

namespace spice {

enum class Distribution { NormalizedUniform, NormalizedGaussian };

std::string_view to_string(Distribution d);
Distribution distribution_from_string(std::string_view s);

// Area-wise load fluctuation model: every load in area a scales by
// (1 + epsilon * xi_a); the xi_a are independent, mean 0, variance 1.
struct UncertaintyModel {
  int n_areas = 1;
  std::vector<int> area_of_load;  // one entry per Network::loads element
  double epsilon = 0.0;
  Distribution distribution = Distribution::NormalizedUniform;
};

// Deterministic proximity-based partition of the loads into n nonempty areas
// (recursive breadth-first bisection from an eccentric seed bus).
std::vector<int> partition_areas(const Network& net, int n);

UncertaintyModel make_uncertainty(const Network& net, int n_areas, double epsilon, Distribution dist);

// Net bus injections (generation minus demand) for one realization of xi,
// with the uniform-participation recourse applied to generator active power.
struct Injections {
  std::vector<double> p;      // per bus position
  std::vector<double> q;      // per bus position
  std::vector<double> gen_p;  // per generator
  std::vector<double> load_p; // per load
  std::vector<double> load_q; // per load
};

Injections inject(const Network& net, const UncertaintyModel& model, std::span<const double> xi);

using SampleMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct SampleBatch {
  SampleMatrix samples;  // M x n, one realization per row
  std::uint64_t seed = 0;
  Distribution distribution = Distribution::NormalizedUniform;
};

SampleBatch sample(Distribution dist, int n, std::size_t count, std::uint64_t seed);
inline SampleBatch sample(const UncertaintyModel& model, std::size_t count, std::uint64_t seed) {
  return sample(model.distribution, model.n_areas, count, seed);
}

}  // namespace spice
