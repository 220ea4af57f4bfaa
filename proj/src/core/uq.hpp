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
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "quantities.hpp"
#include "spice_solver.hpp"

namespace spice {

// Runs fn(begin, end, worker) over [0, count) split in contiguous chunks.
// threads <= 0 means hardware concurrency.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t, std::size_t, int)>& fn);

// Samples of every monitored quantity: one row per retained draw.
struct SampleTable {
  std::vector<QuantityInfo> quantities;
  Eigen::MatrixXd values;  // rows = draws, columns = quantities
  std::size_t failures = 0;
};

// Power flow per draw, warm-started at the deterministic solution. Failed
// solves are dropped and counted; more than 1% failures aborts with NonConvergence.
SampleTable run_monte_carlo(const Network& net, const UncertaintyModel& model, const SampleBatch& batch,
                            MonitorSelection monitor, int threads = 0);

// Per-bus variable values at each draw: out(m, i) = sum_k c(i, k) Psi_k(xi_m),
// touching only the nonzero coefficients.
Eigen::MatrixXd evaluate_variable(const PceBasis& basis, const Eigen::MatrixXd& coefficients,
                                  const SampleMatrix& samples);
// Same through the dense coefficient matrix.
Eigen::MatrixXd evaluate_variable_dense(const PceBasis& basis, const Eigen::MatrixXd& coefficients,
                                        const SampleMatrix& samples);

// Monitored quantities derived from the evaluated voltage polynomials.
SampleTable evaluate_pce(const Network& net, const UncertaintyModel& model, const PceCoefficients& coeffs,
                         const SampleBatch& batch, MonitorSelection monitor, int threads = 0);

struct Histogram {
  double bin_width = 0.0;
  double origin = 0.0;
  std::map<std::int64_t, std::int64_t> counts;
  std::int64_t total = 0;
};

inline constexpr double kBinFraction = 5e-3;

// Bins of width 5e-3 * scale with edges at origin + j * width, origin 0.
Histogram build_histogram(std::span<const double> values, double scale);

// (1/2) sum_b |h1(b)/M1 - h2(b)/M2|; throws Config when the binnings differ.
double tv_distance(const Histogram& h1, const Histogram& h2);

// Nearest-rank empirical quantile: the smallest sample x with F(x) >= level.
double quantile(std::span<const double> values, double level);
// P(X <= q) = 1 - delta and P(X >= q) = 1 - delta respectively.
inline double upper_quantile(std::span<const double> values, double delta) { return quantile(values, 1.0 - delta); }
inline double lower_quantile(std::span<const double> values, double delta) { return quantile(values, delta); }

struct SquareMoments {
  double mean = 0.0;
  double variance = 0.0;
};

// Mean and variance of a(xi)^2 + b(xi)^2 for PCE coefficient vectors a, b.
SquareMoments square_moments(const PceBasis& basis, std::span<const double> a, std::span<const double> b,
                             std::size_t max_support = 64);

struct PceMoments {
  std::vector<SquareMoments> voltage_sq;  // |V_i|^2 per bus
  std::vector<SquareMoments> current_sq;  // |y_s|^2 |V_f / tau - V_t|^2 per branch
};

PceMoments pce_moments(const Network& net, const PceCoefficients& coeffs, std::size_t max_support = 64);

struct QuantityReport {
  QuantityInfo info;
  double mean = 0.0;
  double variance = 0.0;
  std::vector<std::pair<double, double>> quantiles;  // (level, value)
  Histogram histogram;
};

struct UqReport {
  std::string method;
  std::string case_hash;
  std::string distribution;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  std::size_t failures = 0;
  std::vector<QuantityReport> quantities;
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();
};

UqReport summarize(const SampleTable& table, const std::vector<double>& quantile_levels);

nlohmann::ordered_json report_to_json(const UqReport& report);
UqReport report_from_json(const nlohmann::json& j);

struct CompareRow {
  std::string name;
  double value = 0.0;
};

struct Comparison {
  std::vector<CompareRow> rows;  // Ave/Max TV Voltage, Ave/Max TV Flow
  std::vector<std::pair<std::string, double>> per_quantity;
};

// TV distances of every quantity present in both reports. Voltage averages
// run over PQ buses (PV and slack magnitudes are held at their setpoints).
Comparison compare_reports(const UqReport& a, const UqReport& b);

}  // namespace spice
