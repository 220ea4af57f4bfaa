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

#include "commands.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>

#include "ccopf.hpp"
#include "coefficient_io.hpp"
#include "error.hpp"
#include "spice_solver.hpp"
#include "uq.hpp"

namespace spice {

namespace {

using ojson = nlohmann::ordered_json;

template <typename T>
T get_key(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorKind::Config, std::string("config key '") + key + "' has the wrong type");
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string output_path(const RunConfig& c, const std::string& command, const std::string& suffix) {
  std::error_code ec;
  std::filesystem::create_directories(c.output_dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create output directory '" + c.output_dir + "': " + ec.message());
  const std::string stem = c.name.empty() ? command : c.name;
  return (std::filesystem::path(c.output_dir) / (stem + suffix)).string();
}

void write_json(const std::string& path, const ojson& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorKind::Io, "failed writing " + path);
}

std::vector<int> bus_ids(const Network& net) {
  std::vector<int> ids;
  for (const Bus& b : net.buses) ids.push_back(b.id);
  return ids;
}

SpiceConfig spice_config(const RunConfig& c) {
  SpiceConfig s;
  s.c_off = c.c_off;
  s.truncate_quartic = c.truncate_quartic;
  s.degree = c.degree;
  return s;
}

void fill_header(UqReport& r, const std::string& method, const Network& net, const RunConfig& c, Distribution dist) {
  r.method = method;
  r.case_hash = network_hash(net);
  r.distribution = std::string(to_string(dist));
  r.seed = c.seed;
  r.extra["n_areas"] = c.n_areas;
  r.extra["epsilon"] = c.epsilon;
}

ojson moments_json(const Network& net, const PceCoefficients& coeffs) {
  ojson out = ojson::array();
  try {
    const PceMoments m = pce_moments(net, coeffs);
    for (std::size_t i = 0; i < net.num_buses(); ++i)
      out.push_back({{"bus", net.buses[i].id},
                     {"mean_v_sq", m.voltage_sq[i].mean},
                     {"var_v_sq", m.voltage_sq[i].variance}});
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Limit) throw;
    return nullptr;
  }
  return out;
}

CommandResult spice_command(const RunConfig& c, bool full) {
  const auto t0 = std::chrono::steady_clock::now();
  const Network net = load_case(c.case_path);
  const UncertaintyModel model = make_uncertainty(net, c.n_areas, c.epsilon, c.distribution);
  CommandResult res;
  const std::string command = full ? "pce-full" : "spice";

  PceCoefficients coeffs;
  ojson diag;
  const auto t_fit = std::chrono::steady_clock::now();
  if (full) {
    NewtonReport nr;
    coeffs = solve_full_pce(net, model, c.degree, &nr);
    diag = {{"newton_iterations", nr.iterations}, {"mismatch", nr.mismatch}};
  } else {
    const SpiceResult r = run_spice(net, model, spice_config(c));
    coeffs = r.coefficients;
    const SpiceDiagnostics& d = r.diagnostics;
    diag = {{"c_off", c.c_off},
            {"truncate_quartic", c.truncate_quartic},
            {"degree2_entries", d.degree2_entries},
            {"dropped", d.dropped},
            {"sparsity", d.sparsity},
            {"degree1_iterations", d.degree1.iterations},
            {"lm_iterations", d.degree2.iterations},
            {"lm_converged", d.degree2.converged},
            {"unknowns", d.degree2.unknowns},
            {"objective", d.degree2.objective},
            {"consistency", d.consistency},
            {"injection_scale", d.injection_scale},
            {"full_pairs", d.full_pairs},
            {"truncated_pairs", d.truncated_pairs}};
  }
  const double fit_seconds = seconds_since(t_fit);

  const std::string coeff_path = output_path(c, command, ".coeffs.txt");
  save_coefficients(coeff_path, CoefficientFile{network_hash(net), bus_ids(net), coeffs});
  res.files.push_back(coeff_path);

  const auto t_eval = std::chrono::steady_clock::now();
  const SampleBatch batch = sample(c.evaluation_distribution, c.n_areas, c.samples, c.seed);
  const SampleTable table = evaluate_pce(net, model, coeffs, batch, monitor_from_strings(c.monitor), c.threads);
  const double eval_seconds = seconds_since(t_eval);

  UqReport report = summarize(table, c.quantiles);
  fill_header(report, command, net, c, c.evaluation_distribution);
  report.extra["fit_distribution"] = std::string(to_string(c.distribution));
  report.extra["degree"] = c.degree;
  report.extra["basis_terms"] = coeffs.basis->size();
  report.extra["solver"] = diag;
  report.extra["moments"] = moments_json(net, coeffs);
  const std::string report_path = output_path(c, command, ".report.json");
  write_json(report_path, report_to_json(report));
  res.files.push_back(report_path);

  res.summary = {{"command", command},
                 {"case_hash", report.case_hash},
                 {"solver", diag},
                 {"fit_seconds", fit_seconds},
                 {"evaluation_seconds", eval_seconds},
                 {"total_seconds", seconds_since(t0)}};
  return res;
}

CommandResult mc_command(const RunConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const Network net = load_case(c.case_path);
  const UncertaintyModel model = make_uncertainty(net, c.n_areas, c.epsilon, c.distribution);
  const SampleBatch batch = sample(model, c.samples, c.seed);
  const SampleTable table = run_monte_carlo(net, model, batch, monitor_from_strings(c.monitor), c.threads);
  UqReport report = summarize(table, c.quantiles);
  fill_header(report, "mc", net, c, c.distribution);
  CommandResult res;
  const std::string path = output_path(c, "mc", ".report.json");
  write_json(path, report_to_json(report));
  res.files.push_back(path);
  res.summary = {{"command", "mc"},
                 {"case_hash", report.case_hash},
                 {"samples", report.samples},
                 {"failures", report.failures},
                 {"total_seconds", seconds_since(t0)}};
  return res;
}

CommandResult ccopf_command(const RunConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const Network net = load_case(c.case_path);
  const UncertaintyModel model = make_uncertainty(net, c.n_areas, c.epsilon, c.distribution);
  CcOpfConfig cc;
  cc.delta = c.delta;
  cc.max_outer_iterations = c.max_outer_iterations;
  cc.samples = c.samples;
  cc.seed = c.seed;
  cc.validation_samples = c.validation_samples;
  cc.validation_seed = c.validation_seed;
  cc.threads = c.threads;
  cc.spice = spice_config(c);
  const CcOpfResult r = solve_cc_opf(net, model, cc);
  ojson cert = certificate_json(net, cc, r);
  cert["n_areas"] = c.n_areas;
  cert["epsilon"] = c.epsilon;
  cert["distribution"] = std::string(to_string(c.distribution));
  CommandResult res;
  const std::string path = output_path(c, "ccopf", ".certificate.json");
  write_json(path, cert);
  res.files.push_back(path);
  res.summary = {{"command", "ccopf"},
                 {"converged", r.converged},
                 {"outer_iterations", r.iterations.size()},
                 {"cost", r.operating_point.cost},
                 {"validation", cert["validation"]},
                 {"total_seconds", seconds_since(t0)}};
  if (!r.converged) res.exit_code = 3;
  return res;
}

CommandResult partition_command(const RunConfig& c) {
  const Network net = load_case(c.case_path);
  const std::vector<int> areas = partition_areas(net, c.n_areas);
  ojson loads = ojson::array();
  std::vector<std::size_t> per_area(static_cast<std::size_t>(c.n_areas), 0);
  for (std::size_t l = 0; l < net.loads.size(); ++l) {
    loads.push_back({{"load", l + 1}, {"bus", net.loads[l].bus}, {"area", areas[l]}});
    ++per_area[static_cast<std::size_t>(areas[l])];
  }
  ojson buses = ojson::array();
  for (std::size_t i = 0; i < net.num_buses(); ++i) {
    const std::size_t l = net.load_at_bus()[i];
    buses.push_back({{"bus", net.buses[i].id},
                     {"kind", std::string(to_string(net.buses[i].kind))},
                     {"area", l == Network::npos ? ojson(nullptr) : ojson(areas[l])}});
  }
  ojson branches = ojson::array();
  for (const Branch& br : net.branches) branches.push_back({br.from_bus, br.to_bus});
  const ojson out = {{"format", "spice-partition 1"},
                     {"case_hash", network_hash(net)},
                     {"n_areas", c.n_areas},
                     {"loads_per_area", per_area},
                     {"loads", loads},
                     {"buses", buses},
                     {"branches", branches}};
  CommandResult res;
  const std::string path = output_path(c, "partition", ".areas.json");
  write_json(path, out);
  res.files.push_back(path);
  res.summary = {{"command", "partition"}, {"n_areas", c.n_areas}, {"loads_per_area", per_area}};
  return res;
}

UqReport load_report(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot read report '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, "report '" + path + "': " + e.what());
  }
  return report_from_json(j);
}

}  // namespace

RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorKind::Config, "config must be a JSON object");
  static const std::set<std::string> known{
      "case",    "name",         "n_areas",   "epsilon",   "distribution",         "evaluation_distribution",
      "seed",    "samples",      "c_off",     "truncate_quartic", "degree",         "monitor",
      "output_dir", "threads",   "quantiles", "delta",     "max_outer_iterations", "validation_samples",
      "validation_seed"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) fail(ErrorKind::Config, "unknown config key '" + key + "'");

  RunConfig c;
  c.case_path = get_key<std::string>(j, "case", "");
  c.name = get_key<std::string>(j, "name", "");
  c.n_areas = get_key<int>(j, "n_areas", c.n_areas);
  c.epsilon = get_key<double>(j, "epsilon", c.epsilon);
  c.distribution = distribution_from_string(get_key<std::string>(j, "distribution", "uniform"));
  c.evaluation_distribution =
      j.contains("evaluation_distribution")
          ? distribution_from_string(get_key<std::string>(j, "evaluation_distribution", ""))
          : c.distribution;
  c.seed = get_key<std::uint64_t>(j, "seed", c.seed);
  c.samples = get_key<std::size_t>(j, "samples", c.samples);
  c.c_off = get_key<double>(j, "c_off", c.c_off);
  c.truncate_quartic = get_key<bool>(j, "truncate_quartic", c.truncate_quartic);
  c.degree = get_key<int>(j, "degree", c.degree);
  c.monitor = get_key<std::vector<std::string>>(j, "monitor", c.monitor);
  c.output_dir = get_key<std::string>(j, "output_dir", c.output_dir);
  c.threads = get_key<int>(j, "threads", c.threads);
  c.quantiles = get_key<std::vector<double>>(j, "quantiles", c.quantiles);
  c.delta = get_key<double>(j, "delta", c.delta);
  c.max_outer_iterations = get_key<int>(j, "max_outer_iterations", c.max_outer_iterations);
  c.validation_samples = get_key<std::size_t>(j, "validation_samples", c.validation_samples);
  c.validation_seed = get_key<std::uint64_t>(j, "validation_seed", c.validation_seed);

  if (c.n_areas < 1) fail(ErrorKind::Config, "n_areas must be at least 1");
  if (!(c.epsilon >= 0.0)) fail(ErrorKind::Config, "epsilon must be non-negative");
  if (c.samples < 1) fail(ErrorKind::Config, "samples must be positive");
  if (!(c.c_off >= 0.0)) fail(ErrorKind::Config, "c_off must be non-negative");
  if (c.degree != 1 && c.degree != 2) fail(ErrorKind::Config, "degree must be 1 or 2");
  for (double q : c.quantiles)
    if (!(q > 0.0 && q < 1.0)) fail(ErrorKind::Config, "quantile levels must lie in (0, 1)");
  if (!(c.delta > 0.0 && c.delta < 0.5)) fail(ErrorKind::Config, "delta must lie in (0, 0.5)");
  if (c.max_outer_iterations < 1) fail(ErrorKind::Config, "max_outer_iterations must be positive");
  monitor_from_strings(c.monitor);
  return c;
}

nlohmann::ordered_json config_to_json(const RunConfig& c) {
  return {{"case", c.case_path},
          {"name", c.name},
          {"n_areas", c.n_areas},
          {"epsilon", c.epsilon},
          {"distribution", std::string(to_string(c.distribution))},
          {"evaluation_distribution", std::string(to_string(c.evaluation_distribution))},
          {"seed", c.seed},
          {"samples", c.samples},
          {"c_off", c.c_off},
          {"truncate_quartic", c.truncate_quartic},
          {"degree", c.degree},
          {"monitor", c.monitor},
          {"output_dir", c.output_dir},
          {"threads", c.threads},
          {"quantiles", c.quantiles},
          {"delta", c.delta},
          {"max_outer_iterations", c.max_outer_iterations},
          {"validation_samples", c.validation_samples},
          {"validation_seed", c.validation_seed}};
}

CommandResult run_command(const std::string& command, const RunConfig& config) {
  if (command != "partition" && command != "spice" && command != "pce-full" && command != "mc" && command != "ccopf")
    fail(ErrorKind::Config, "unknown command '" + command + "'");
  if (config.case_path.empty()) fail(ErrorKind::Config, "config key 'case' is required");
  if (command == "spice") return spice_command(config, false);
  if (command == "pce-full") return spice_command(config, true);
  if (command == "mc") return mc_command(config);
  if (command == "ccopf") return ccopf_command(config);
  return partition_command(config);
}

CommandResult compare_command(const std::string& report_a, const std::string& report_b,
                              const std::string& output_path) {
  const UqReport a = load_report(report_a);
  const UqReport b = load_report(report_b);
  const Comparison cmp = compare_reports(a, b);
  ojson rows = ojson::object();
  for (const CompareRow& r : cmp.rows) rows[r.name] = r.value;
  ojson per = ojson::object();
  for (const auto& [name, tv] : cmp.per_quantity) per[name] = tv;
  const ojson out = {{"format", "spice-compare 1"},
                     {"a", {{"method", a.method}, {"distribution", a.distribution}, {"seed", a.seed}}},
                     {"b", {{"method", b.method}, {"distribution", b.distribution}, {"seed", b.seed}}},
                     {"rows", rows},
                     {"per_quantity", per}};
  CommandResult res;
  if (!output_path.empty()) {
    write_json(output_path, out);
    res.files.push_back(output_path);
  }
  res.summary = out;
  return res;
}

}  // namespace spice
