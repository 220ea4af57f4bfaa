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

#include "spice/spice.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "coefficient_io.hpp"
#include "commands.hpp"
#include "error.hpp"
#include "network.hpp"
#include "spice_solver.hpp"
#include "uq.hpp"

struct spice_network {
  spice::Network net;
};

struct spice_solution {
  spice::CoefficientFile file;
  double sparsity = 0.0;
};

namespace {

thread_local std::string g_last_error;

spice_status status_of(spice::ErrorKind kind) {
  switch (kind) {
    case spice::ErrorKind::Parse: return SPICE_ERR_PARSE;
    case spice::ErrorKind::Validation: return SPICE_ERR_VALIDATION;
    case spice::ErrorKind::Config: return SPICE_ERR_CONFIG;
    case spice::ErrorKind::NonConvergence: return SPICE_ERR_NONCONVERGENCE;
    case spice::ErrorKind::Singular: return SPICE_ERR_SINGULAR;
    case spice::ErrorKind::Infeasible: return SPICE_ERR_INFEASIBLE;
    case spice::ErrorKind::Io: return SPICE_ERR_IO;
    case spice::ErrorKind::Limit: return SPICE_ERR_LIMIT;
  }
  return SPICE_ERR_INTERNAL;
}

spice_status set_error(spice_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <typename Fn>
spice_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    return fn();
  } catch (const spice::Error& e) {
    return set_error(status_of(e.kind()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return set_error(SPICE_ERR_PARSE, e.what());
  } catch (const std::bad_alloc&) {
    return set_error(SPICE_ERR_LIMIT, "out of memory");
  } catch (const std::exception& e) {
    return set_error(SPICE_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(SPICE_ERR_INTERNAL, "unknown exception");
  }
}

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

#define SPICE_REQUIRE(cond, what) \
  if (!(cond)) return set_error(SPICE_ERR_ARGUMENT, what)

bool parse_variable(const char* name, spice::Variable& out) {
  for (spice::Variable v : spice::kAllVariables)
    if (spice::to_string(v) == name) {
      out = v;
      return true;
    }
  return false;
}

}  // namespace

extern "C" {

const char* spice_last_error(void) { return g_last_error.c_str(); }

const char* spice_status_name(spice_status status) {
  switch (status) {
    case SPICE_OK: return "ok";
    case SPICE_ERR_ARGUMENT: return "argument";
    case SPICE_ERR_PARSE: return "parse";
    case SPICE_ERR_VALIDATION: return "validation";
    case SPICE_ERR_CONFIG: return "config";
    case SPICE_ERR_NONCONVERGENCE: return "non-convergence";
    case SPICE_ERR_SINGULAR: return "singular";
    case SPICE_ERR_INFEASIBLE: return "infeasible";
    case SPICE_ERR_IO: return "io";
    case SPICE_ERR_LIMIT: return "limit";
    case SPICE_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

int spice_exit_code(spice_status status) {
  switch (status) {
    case SPICE_OK: return 0;
    case SPICE_ERR_NONCONVERGENCE:
    case SPICE_ERR_SINGULAR: return 3;
    case SPICE_ERR_INFEASIBLE: return 4;
    case SPICE_ERR_INTERNAL: return 1;
    default: return 2;
  }
}

const char* spice_version(void) { return "0.1.0"; }

void spice_string_free(char* s) { std::free(s); }

spice_status spice_network_load(const char* path, spice_network** out) {
  SPICE_REQUIRE(path && out, "null argument");
  *out = nullptr;
  return guarded([&] {
    *out = new spice_network{spice::load_case(path)};
    return SPICE_OK;
  });
}

spice_status spice_network_parse(const char* text, spice_network** out) {
  SPICE_REQUIRE(text && out, "null argument");
  *out = nullptr;
  return guarded([&] {
    *out = new spice_network{spice::parse_case(text)};
    return SPICE_OK;
  });
}

void spice_network_free(spice_network* net) { delete net; }

spice_status spice_network_counts(const spice_network* net, size_t* buses, size_t* branches, size_t* generators,
                                  size_t* loads) {
  SPICE_REQUIRE(net, "null network");
  if (buses) *buses = net->net.num_buses();
  if (branches) *branches = net->net.num_branches();
  if (generators) *generators = net->net.generators.size();
  if (loads) *loads = net->net.loads.size();
  return SPICE_OK;
}

spice_status spice_network_hash(const spice_network* net, char* buf, size_t buf_len) {
  SPICE_REQUIRE(net && buf, "null argument");
  return guarded([&] {
    const std::string h = spice::network_hash(net->net);
    if (buf_len < h.size() + 1) return set_error(SPICE_ERR_ARGUMENT, "hash buffer too small");
    std::memcpy(buf, h.c_str(), h.size() + 1);
    return SPICE_OK;
  });
}

spice_status spice_network_to_json(const spice_network* net, char** out) {
  SPICE_REQUIRE(net && out, "null argument");
  *out = nullptr;
  return guarded([&] {
    *out = dup_string(spice::network_to_json(net->net).dump(2));
    return SPICE_OK;
  });
}

spice_status spice_network_partition(const spice_network* net, int n_areas, int* areas, size_t loads) {
  SPICE_REQUIRE(net && areas, "null argument");
  SPICE_REQUIRE(loads == net->net.loads.size(), "area buffer length differs from the load count");
  return guarded([&] {
    const std::vector<int> a = spice::partition_areas(net->net, n_areas);
    std::copy(a.begin(), a.end(), areas);
    return SPICE_OK;
  });
}

void spice_options_default(spice_options* options) {
  if (!options) return;
  options->n_areas = 1;
  options->epsilon = 0.0;
  options->distribution = "uniform";
  options->c_off = 1e-10;
  options->truncate_quartic = 1;
  options->degree = 2;
  options->full = 0;
}

spice_status spice_solve(const spice_network* net, const spice_options* options, spice_solution** out) {
  SPICE_REQUIRE(net && options && out, "null argument");
  *out = nullptr;
  return guarded([&] {
    const spice::Distribution dist =
        spice::distribution_from_string(options->distribution ? options->distribution : "uniform");
    const spice::UncertaintyModel model =
        spice::make_uncertainty(net->net, options->n_areas, options->epsilon, dist);
    auto sol = std::make_unique<spice_solution>();
    sol->file.case_hash = spice::network_hash(net->net);
    for (const spice::Bus& b : net->net.buses) sol->file.bus_ids.push_back(b.id);
    if (options->full) {
      if (options->degree != 1 && options->degree != 2)
        return set_error(SPICE_ERR_CONFIG, "degree must be 1 or 2");
      sol->file.coefficients = spice::solve_full_pce(net->net, model, options->degree);
    } else {
      spice::SpiceConfig cfg;
      cfg.c_off = options->c_off;
      cfg.truncate_quartic = options->truncate_quartic != 0;
      cfg.degree = options->degree;
      spice::SpiceResult r = spice::run_spice(net->net, model, cfg);
      sol->file.coefficients = std::move(r.coefficients);
      sol->sparsity = r.diagnostics.sparsity;
    }
    *out = sol.release();
    return SPICE_OK;
  });
}

spice_status spice_solution_load(const char* path, spice_solution** out) {
  SPICE_REQUIRE(path && out, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto sol = std::make_unique<spice_solution>();
    sol->file = spice::load_coefficients(path);
    *out = sol.release();
    return SPICE_OK;
  });
}

spice_status spice_solution_save(const spice_solution* sol, const char* path) {
  SPICE_REQUIRE(sol && path, "null argument");
  return guarded([&] {
    spice::save_coefficients(path, sol->file);
    return SPICE_OK;
  });
}

void spice_solution_free(spice_solution* sol) { delete sol; }

spice_status spice_solution_shape(const spice_solution* sol, size_t* buses, int* dimension, int* degree,
                                  size_t* terms) {
  SPICE_REQUIRE(sol, "null solution");
  const spice::PceBasis& basis = *sol->file.coefficients.basis;
  if (buses) *buses = sol->file.bus_ids.size();
  if (dimension) *dimension = basis.dimension();
  if (degree) *degree = basis.degree();
  if (terms) *terms = basis.size();
  return SPICE_OK;
}

spice_status spice_solution_sparsity(const spice_solution* sol, double* sparsity) {
  SPICE_REQUIRE(sol && sparsity, "null argument");
  *sparsity = sol->sparsity;
  return SPICE_OK;
}

spice_status spice_solution_coefficient(const spice_solution* sol, const char* variable, size_t bus, size_t term,
                                        double* value) {
  SPICE_REQUIRE(sol && variable && value, "null argument");
  spice::Variable var{};
  SPICE_REQUIRE(parse_variable(variable, var), "unknown variable (expected v_re, v_im, p or q)");
  return guarded([&] {
    const Eigen::MatrixXd& m = sol->file.coefficients[var];
    if (bus >= static_cast<size_t>(m.rows()) || term >= static_cast<size_t>(m.cols()))
      return set_error(SPICE_ERR_ARGUMENT, "coefficient index out of range");
    *value = m(static_cast<Eigen::Index>(bus), static_cast<Eigen::Index>(term));
    return SPICE_OK;
  });
}

spice_status spice_solution_evaluate(const spice_solution* sol, const char* variable, const double* xi, size_t count,
                                     double* out) {
  SPICE_REQUIRE(sol && variable && (count == 0 || (xi && out)), "null argument");
  spice::Variable var{};
  SPICE_REQUIRE(parse_variable(variable, var), "unknown variable (expected v_re, v_im, p or q)");
  return guarded([&] {
    const spice::PceCoefficients& c = sol->file.coefficients;
    const auto n = static_cast<Eigen::Index>(c.basis->dimension());
    const spice::SampleMatrix samples =
        Eigen::Map<const spice::SampleMatrix>(xi, static_cast<Eigen::Index>(count), n);
    const Eigen::MatrixXd v = spice::evaluate_variable(*c.basis, c[var], samples);
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(out, v.rows(), v.cols()) = v;
    return SPICE_OK;
  });
}

spice_status spice_run_command(const char* command, const char* config_json, char** summary) {
  SPICE_REQUIRE(command && config_json, "null argument");
  if (summary) *summary = nullptr;
  return guarded([&] {
    const spice::RunConfig cfg = spice::config_from_json(nlohmann::json::parse(config_json));
    const spice::CommandResult r = spice::run_command(command, cfg);
    nlohmann::ordered_json digest = r.summary;
    digest["files"] = r.files;
    if (summary) *summary = dup_string(digest.dump(2));
    if (r.exit_code == 3) return set_error(SPICE_ERR_NONCONVERGENCE, "CC-OPF loop reached max_outer_iterations");
    return SPICE_OK;
  });
}

spice_status spice_compare_reports(const char* report_a, const char* report_b, const char* output_path,
                                   char** table) {
  SPICE_REQUIRE(report_a && report_b, "null argument");
  if (table) *table = nullptr;
  return guarded([&] {
    const spice::CommandResult r = spice::compare_command(report_a, report_b, output_path ? output_path : "");
    if (table) *table = dup_string(r.summary.dump(2));
    return SPICE_OK;
  });
}

spice_status spice_config_normalize(const char* config_json, char** out) {
  SPICE_REQUIRE(config_json && out, "null argument");
  *out = nullptr;
  return guarded([&] {
    *out = dup_string(spice::config_to_json(spice::config_from_json(nlohmann::json::parse(config_json))).dump(2));
    return SPICE_OK;
  });
}

}  // extern "C"
