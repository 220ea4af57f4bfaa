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

#include "uq.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "error.hpp"

namespace spice {

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t, std::size_t, int)>& fn) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads) : std::max(1u, std::thread::hardware_concurrency());
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    fn(0, count, 0);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = std::min(count, w * chunk), end = std::min(count, begin + chunk);
    pool.emplace_back([&, w, begin, end] {
      try {
        fn(begin, end, static_cast<int>(w));
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace {

SampleTable compact(const QuantityMap& map, Eigen::MatrixXd&& values, const std::vector<char>& ok) {
  SampleTable table;
  table.quantities = map.info();
  const auto kept = static_cast<Eigen::Index>(std::count(ok.begin(), ok.end(), 1));
  table.failures = ok.size() - static_cast<std::size_t>(kept);
  if (table.failures == 0) {
    table.values = std::move(values);
    return table;
  }
  table.values.resize(kept, values.cols());
  Eigen::Index r = 0;
  for (std::size_t m = 0; m < ok.size(); ++m)
    if (ok[m]) table.values.row(r++) = values.row(static_cast<Eigen::Index>(m));
  return table;
}

}  // namespace

SampleTable run_monte_carlo(const Network& net, const UncertaintyModel& model, const SampleBatch& batch,
                            MonitorSelection monitor, int threads) {
  auto y = std::make_shared<const AdmittanceMatrix>(build_admittance(net));
  const std::vector<double> xi0(static_cast<std::size_t>(model.n_areas), 0.0);
  const PfSpec nominal = make_pf_spec(net, y, inject(net, model, xi0));
  const VoltageState warm = solve_pf(nominal, flat_start(nominal)).state;

  const QuantityMap map(net, monitor);
  const auto m_total = static_cast<std::size_t>(batch.samples.rows());
  Eigen::MatrixXd values(static_cast<Eigen::Index>(m_total), static_cast<Eigen::Index>(map.size()));
  std::vector<char> ok(m_total, 0);

  parallel_for(m_total, threads, [&](std::size_t begin, std::size_t end, int) {
    PowerFlowSolver solver;
    std::vector<double> row(map.size());
    for (std::size_t m = begin; m < end; ++m) {
      const auto mm = static_cast<Eigen::Index>(m);
      const std::span<const double> xi(batch.samples.row(mm).data(), static_cast<std::size_t>(model.n_areas));
      const Injections inj = inject(net, model, xi);
      const PfSpec spec = make_pf_spec(net, y, inj);
      PfResult res;
      try {
        res = solver.solve(spec, warm);
      } catch (const Error&) {
        continue;
      }
      if (!res.converged) continue;
      map.evaluate(net, *y, inj, res.state, row);
      for (std::size_t q = 0; q < row.size(); ++q) values(mm, static_cast<Eigen::Index>(q)) = row[q];
      ok[m] = 1;
    }
  });

  SampleTable table = compact(map, std::move(values), ok);
  if (static_cast<double>(table.failures) > 0.01 * static_cast<double>(m_total))
    fail(ErrorKind::NonConvergence, std::to_string(table.failures) + " of " + std::to_string(m_total) +
                                        " Monte-Carlo power flow solves failed (limit 1%)");
  return table;
}

Eigen::MatrixXd evaluate_variable(const PceBasis& basis, const Eigen::MatrixXd& coefficients,
                                  const SampleMatrix& samples) {
  const std::size_t kk = basis.size();
  const auto rows = coefficients.rows();
  // Nonzero (k, value) per row.
  std::vector<std::vector<std::pair<std::size_t, double>>> nz(static_cast<std::size_t>(rows));
  for (Eigen::Index i = 0; i < rows; ++i)
    for (std::size_t k = 0; k < kk; ++k)
      if (const double c = coefficients(i, static_cast<Eigen::Index>(k)); c != 0.0)
        nz[static_cast<std::size_t>(i)].emplace_back(k, c);

  const auto n = static_cast<std::size_t>(basis.dimension());
  std::vector<double> psi(kk), scratch(n * static_cast<std::size_t>(basis.degree() + 1));
  Eigen::MatrixXd out(samples.rows(), rows);
  for (Eigen::Index m = 0; m < samples.rows(); ++m) {
    basis.eval_all(std::span<const double>(samples.row(m).data(), n), psi, scratch);
    for (Eigen::Index i = 0; i < rows; ++i) {
      double v = 0.0;
      for (const auto& [k, c] : nz[static_cast<std::size_t>(i)]) v += c * psi[k];
      out(m, i) = v;
    }
  }
  return out;
}

Eigen::MatrixXd evaluate_variable_dense(const PceBasis& basis, const Eigen::MatrixXd& coefficients,
                                        const SampleMatrix& samples) {
  const auto kk = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd psi(samples.rows(), kk);
  for (Eigen::Index m = 0; m < samples.rows(); ++m) {
    const std::vector<double> xi(samples.row(m).data(), samples.row(m).data() + samples.cols());
    for (Eigen::Index k = 0; k < kk; ++k) psi(m, k) = basis.eval(static_cast<std::size_t>(k), xi);
  }
  return psi * coefficients.transpose();
}

SampleTable evaluate_pce(const Network& net, const UncertaintyModel& model, const PceCoefficients& coeffs,
                         const SampleBatch& batch, MonitorSelection monitor, int threads) {
  if (batch.samples.cols() != coeffs.basis->dimension())
    fail(ErrorKind::Config, "sample dimension does not match the basis dimension");
  const AdmittanceMatrix y = build_admittance(net);
  const QuantityMap map(net, monitor);
  const Eigen::MatrixXd e = evaluate_variable(*coeffs.basis, coeffs.v_re, batch.samples);
  const Eigen::MatrixXd f = evaluate_variable(*coeffs.basis, coeffs.v_im, batch.samples);
  const auto m_total = static_cast<std::size_t>(batch.samples.rows());
  Eigen::MatrixXd values(batch.samples.rows(), static_cast<Eigen::Index>(map.size()));

  parallel_for(m_total, threads, [&](std::size_t begin, std::size_t end, int) {
    std::vector<double> row(map.size());
    VoltageState v;
    for (std::size_t m = begin; m < end; ++m) {
      const auto mm = static_cast<Eigen::Index>(m);
      const std::span<const double> xi(batch.samples.row(mm).data(), static_cast<std::size_t>(model.n_areas));
      v.v_re = e.row(mm).transpose();
      v.v_im = f.row(mm).transpose();
      map.evaluate(net, y, inject(net, model, xi), v, row);
      for (std::size_t q = 0; q < row.size(); ++q) values(mm, static_cast<Eigen::Index>(q)) = row[q];
    }
  });
  return compact(map, std::move(values), std::vector<char>(m_total, 1));
}

Histogram build_histogram(std::span<const double> values, double scale) {
  if (values.empty()) fail(ErrorKind::Config, "histogram of an empty sample");
  if (!(scale > 0.0)) fail(ErrorKind::Config, "histogram scale must be positive");
  Histogram h;
  h.bin_width = kBinFraction * scale;
  for (double v : values) ++h.counts[static_cast<std::int64_t>(std::floor((v - h.origin) / h.bin_width))];
  h.total = static_cast<std::int64_t>(values.size());
  return h;
}

double tv_distance(const Histogram& h1, const Histogram& h2) {
  if (std::abs(h1.bin_width - h2.bin_width) > 1e-12 * std::max(h1.bin_width, h2.bin_width) || h1.origin != h2.origin)
    fail(ErrorKind::Config, "histograms use different binning");
  if (h1.total <= 0 || h2.total <= 0) fail(ErrorKind::Config, "empty histogram");
  const double w1 = 1.0 / static_cast<double>(h1.total), w2 = 1.0 / static_cast<double>(h2.total);
  double sum = 0.0;
  auto a = h1.counts.begin(), b = h2.counts.begin();
  while (a != h1.counts.end() || b != h2.counts.end()) {
    if (b == h2.counts.end() || (a != h1.counts.end() && a->first < b->first)) {
      sum += static_cast<double>(a->second) * w1;
      ++a;
    } else if (a == h1.counts.end() || b->first < a->first) {
      sum += static_cast<double>(b->second) * w2;
      ++b;
    } else {
      sum += std::abs(static_cast<double>(a->second) * w1 - static_cast<double>(b->second) * w2);
      ++a;
      ++b;
    }
  }
  return 0.5 * sum;
}

double quantile(std::span<const double> values, double level) {
  if (values.empty()) fail(ErrorKind::Config, "quantile of an empty sample");
  if (!(level > 0.0 && level < 1.0)) fail(ErrorKind::Config, "quantile level must lie in (0, 1)");
  std::vector<double> sorted(values.begin(), values.end());
  const auto m = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(level * m - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1), sorted.end());
  return sorted[rank - 1];
}

namespace {

std::vector<std::size_t> support_of(std::span<const double> a, std::span<const double> b) {
  std::vector<std::size_t> s;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a[k] != 0.0 || b[k] != 0.0) s.push_back(k);
  return s;
}

SquareMoments moments_from(const std::vector<QuadrupleEntry>& quad, const std::vector<std::size_t>& support,
                           std::span<const double> a, std::span<const double> b) {
  SquareMoments m;
  for (std::size_t k : support) m.mean += a[k] * a[k] + b[k] * b[k];
  double second = 0.0;
  for (const QuadrupleEntry& e : quad) {
    const std::size_t k1 = support[e.k[0]], k2 = support[e.k[1]], k3 = support[e.k[2]], k4 = support[e.k[3]];
    second += e.value * (a[k1] * a[k2] + b[k1] * b[k2]) * (a[k3] * a[k4] + b[k3] * b[k4]);
  }
  m.variance = std::max(0.0, second - m.mean * m.mean);
  return m;
}

}  // namespace

SquareMoments square_moments(const PceBasis& basis, std::span<const double> a, std::span<const double> b,
                             std::size_t max_support) {
  const std::vector<std::size_t> support = support_of(a, b);
  return moments_from(basis.quadruple(support, max_support), support, a, b);
}

PceMoments pce_moments(const Network& net, const PceCoefficients& coeffs, std::size_t max_support) {
  const PceBasis& basis = *coeffs.basis;
  const std::size_t kk = basis.size();
  std::map<std::vector<std::size_t>, std::vector<QuadrupleEntry>> cache;
  auto moments = [&](const std::vector<double>& a, const std::vector<double>& b) {
    const std::vector<std::size_t> support = support_of(a, b);
    auto it = cache.find(support);
    if (it == cache.end()) it = cache.emplace(support, basis.quadruple(support, max_support)).first;
    return moments_from(it->second, support, a, b);
  };

  PceMoments out;
  std::vector<double> a(kk), b(kk);
  for (std::size_t i = 0; i < net.num_buses(); ++i) {
    for (std::size_t k = 0; k < kk; ++k) {
      a[k] = coeffs.v_re(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
      b[k] = coeffs.v_im(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    }
    out.voltage_sq.push_back(moments(a, b));
  }
  for (const Branch& br : net.branches) {
    const auto f = static_cast<Eigen::Index>(net.bus_index(br.from_bus));
    const auto t = static_cast<Eigen::Index>(net.bus_index(br.to_bus));
    const double c = std::cos(br.shift) / br.tap, s = std::sin(br.shift) / br.tap;
    const double y = std::abs(br.series_admittance);
    for (std::size_t k = 0; k < kk; ++k) {
      const auto kx = static_cast<Eigen::Index>(k);
      const double ef = coeffs.v_re(f, kx), ff = coeffs.v_im(f, kx);
      // y_s (V_f / tau - V_t), split into real and imaginary parts.
      a[k] = y * (ef * c + ff * s - coeffs.v_re(t, kx));
      b[k] = y * (ff * c - ef * s - coeffs.v_im(t, kx));
    }
    out.current_sq.push_back(moments(a, b));
  }
  return out;
}

UqReport summarize(const SampleTable& table, const std::vector<double>& quantile_levels) {
  UqReport r;
  r.samples = static_cast<std::size_t>(table.values.rows());
  r.failures = table.failures;
  for (std::size_t q = 0; q < table.quantities.size(); ++q) {
    const auto col = table.values.col(static_cast<Eigen::Index>(q));
    const std::span<const double> v(col.data(), static_cast<std::size_t>(col.size()));
    QuantityReport qr;
    qr.info = table.quantities[q];
    qr.mean = col.mean();
    qr.variance = col.size() > 1 ? (col.array() - qr.mean).square().sum() / static_cast<double>(col.size() - 1) : 0.0;
    for (double level : quantile_levels) qr.quantiles.emplace_back(level, quantile(v, level));
    qr.histogram = build_histogram(v, qr.info.scale);
    r.quantities.push_back(std::move(qr));
  }
  return r;
}

namespace {

nlohmann::ordered_json limit_json(double x) {
  return std::isfinite(x) ? nlohmann::ordered_json(x) : nlohmann::ordered_json(nullptr);
}

double limit_from(const nlohmann::json& j, double fallback) { return j.is_null() ? fallback : j.get<double>(); }

}  // namespace

nlohmann::ordered_json report_to_json(const UqReport& report) {
  nlohmann::ordered_json j;
  j["format"] = "spice-report 1";
  j["method"] = report.method;
  j["case_hash"] = report.case_hash;
  j["distribution"] = report.distribution;
  j["seed"] = report.seed;
  j["samples"] = report.samples;
  j["failures"] = report.failures;
  for (const auto& [k, v] : report.extra.items()) j[k] = v;
  nlohmann::ordered_json qs = nlohmann::ordered_json::array();
  for (const QuantityReport& q : report.quantities) {
    nlohmann::ordered_json e;
    e["name"] = q.info.name;
    e["class"] = to_string(q.info.cls);
    e["element"] = q.info.element;
    if (q.info.cls == QuantityClass::Voltage) e["bus_kind"] = to_string(q.info.bus_kind);
    e["scale"] = q.info.scale;
    e["lower"] = limit_json(q.info.lower);
    e["upper"] = limit_json(q.info.upper);
    e["mean"] = q.mean;
    e["variance"] = q.variance;
    nlohmann::ordered_json quant = nlohmann::ordered_json::array();
    for (const auto& [level, value] : q.quantiles) quant.push_back({level, value});
    e["quantiles"] = quant;
    nlohmann::ordered_json bins = nlohmann::ordered_json::array();
    for (const auto& [key, count] : q.histogram.counts) bins.push_back({key, count});
    e["histogram"] = {{"bin_width", q.histogram.bin_width},
                      {"origin", q.histogram.origin},
                      {"total", q.histogram.total},
                      {"bins", bins}};
    qs.push_back(std::move(e));
  }
  j["quantities"] = std::move(qs);
  return j;
}

UqReport report_from_json(const nlohmann::json& j) {
  try {
    UqReport r;
    r.method = j.at("method").get<std::string>();
    r.case_hash = j.at("case_hash").get<std::string>();
    r.distribution = j.value("distribution", "");
    r.seed = j.value("seed", std::uint64_t{0});
    r.samples = j.at("samples").get<std::size_t>();
    r.failures = j.value("failures", std::size_t{0});
    for (const auto& e : j.at("quantities")) {
      QuantityReport q;
      q.info.name = e.at("name").get<std::string>();
      q.info.cls = quantity_class_from_string(e.at("class").get<std::string>());
      q.info.element = e.value("element", std::size_t{0});
      if (e.contains("bus_kind")) q.info.bus_kind = bus_kind_from_string(e.at("bus_kind").get<std::string>());
      q.info.scale = e.at("scale").get<double>();
      q.info.lower = limit_from(e.value("lower", nlohmann::json()), -std::numeric_limits<double>::infinity());
      q.info.upper = limit_from(e.value("upper", nlohmann::json()), std::numeric_limits<double>::infinity());
      q.mean = e.value("mean", 0.0);
      q.variance = e.value("variance", 0.0);
      for (const auto& p : e.value("quantiles", nlohmann::json::array()))
        q.quantiles.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
      const auto& h = e.at("histogram");
      q.histogram.bin_width = h.at("bin_width").get<double>();
      q.histogram.origin = h.at("origin").get<double>();
      q.histogram.total = h.at("total").get<std::int64_t>();
      for (const auto& b : h.at("bins")) q.histogram.counts[b.at(0).get<std::int64_t>()] = b.at(1).get<std::int64_t>();
      r.quantities.push_back(std::move(q));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, std::string("malformed report: ") + e.what());
  }
}

Comparison compare_reports(const UqReport& a, const UqReport& b) {
  std::map<std::string, const QuantityReport*> by_name;
  for (const QuantityReport& q : b.quantities) by_name.emplace(q.info.name, &q);
  Comparison c;
  double v_sum = 0.0, v_max = 0.0, f_sum = 0.0, f_max = 0.0;
  std::size_t v_count = 0, f_count = 0;
  for (const QuantityReport& q : a.quantities) {
    const auto it = by_name.find(q.info.name);
    if (it == by_name.end()) continue;
    double tv = 0.0;
    try {
      tv = tv_distance(q.histogram, it->second->histogram);
    } catch (const Error& e) {
      fail(ErrorKind::Config, q.info.name + ": " + e.what());
    }
    c.per_quantity.emplace_back(q.info.name, tv);
    if (q.info.cls == QuantityClass::Voltage && q.info.bus_kind == BusKind::PQ) {
      v_sum += tv;
      v_max = std::max(v_max, tv);
      ++v_count;
    } else if (q.info.cls == QuantityClass::Flow) {
      f_sum += tv;
      f_max = std::max(f_max, tv);
      ++f_count;
    }
  }
  if (c.per_quantity.empty()) fail(ErrorKind::Config, "reports share no quantities");
  c.rows = {{"Ave TV Voltage", v_count ? v_sum / static_cast<double>(v_count) : 0.0},
            {"Max TV Voltage", v_max},
            {"Ave TV Flow", f_count ? f_sum / static_cast<double>(f_count) : 0.0},
            {"Max TV Flow", f_max}};
  return c;
}

}  // namespace spice
