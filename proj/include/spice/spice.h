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

#ifndef SPICE_SPICE_H
#define SPICE_SPICE_H

#include <stddef.h>

#if defined(_WIN32)
#  if defined(SPICE_BUILDING_LIBRARY)
#    define SPICE_API __declspec(dllexport)
#  else
#    define SPICE_API __declspec(dllimport)
#  endif
#else
#  define SPICE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum spice_status {
  SPICE_OK = 0,
  SPICE_ERR_ARGUMENT = 1,       /* null pointer or out-of-range index */
  SPICE_ERR_PARSE = 2,          /* malformed case, config, report or coefficient file */
  SPICE_ERR_VALIDATION = 3,     /* well-formed input violating a model invariant */
  SPICE_ERR_CONFIG = 4,         /* bad configuration value */
  SPICE_ERR_NONCONVERGENCE = 5, /* iterative solver did not reach tolerance */
  SPICE_ERR_SINGULAR = 6,       /* singular linear system */
  SPICE_ERR_INFEASIBLE = 7,     /* OPF or chance-constrained loop infeasible */
  SPICE_ERR_IO = 8,             /* filesystem failure */
  SPICE_ERR_LIMIT = 9,          /* size limit exceeded */
  SPICE_ERR_INTERNAL = 10
} spice_status;

/* Message of the last failing call on this thread; empty after success. */
SPICE_API const char* spice_last_error(void);
SPICE_API const char* spice_status_name(spice_status status);
/* Process exit code for a status: 0, 2 (input/config), 3 (solver), 4 (infeasible). */
SPICE_API int spice_exit_code(spice_status status);
SPICE_API const char* spice_version(void);

/* Strings returned through char** out-parameters are owned by the caller. */
SPICE_API void spice_string_free(char* s);

/* ---- networks ---- */

typedef struct spice_network spice_network;

/* MATPOWER .m text or the JSON network schema, sniffed by content. */
SPICE_API spice_status spice_network_load(const char* path, spice_network** out);
SPICE_API spice_status spice_network_parse(const char* text, spice_network** out);
SPICE_API void spice_network_free(spice_network* net);

SPICE_API spice_status spice_network_counts(const spice_network* net, size_t* buses, size_t* branches,
                                            size_t* generators, size_t* loads);
/* 16 hex digits; buf must hold at least 17 bytes. */
SPICE_API spice_status spice_network_hash(const spice_network* net, char* buf, size_t buf_len);
SPICE_API spice_status spice_network_to_json(const spice_network* net, char** out);
/* Area of every load (0-based), written to areas[0 .. loads). */
SPICE_API spice_status spice_network_partition(const spice_network* net, int n_areas, int* areas, size_t loads);

/* ---- polynomial chaos solutions ---- */

typedef struct spice_options {
  int n_areas;
  double epsilon;
  const char* distribution; /* "uniform" or "gaussian" */
  double c_off;
  int truncate_quartic;
  int degree; /* 1 or 2 */
  int full;   /* nonzero: square untruncated Galerkin solve instead of SPICE */
} spice_options;

SPICE_API void spice_options_default(spice_options* options);

typedef struct spice_solution spice_solution;

SPICE_API spice_status spice_solve(const spice_network* net, const spice_options* options, spice_solution** out);
SPICE_API spice_status spice_solution_load(const char* path, spice_solution** out);
SPICE_API spice_status spice_solution_save(const spice_solution* sol, const char* path);
SPICE_API void spice_solution_free(spice_solution* sol);

SPICE_API spice_status spice_solution_shape(const spice_solution* sol, size_t* buses, int* dimension, int* degree,
                                            size_t* terms);
/* Degree-2 sparsity fraction of a SPICE solve; 0 for loaded or full solutions. */
SPICE_API spice_status spice_solution_sparsity(const spice_solution* sol, double* sparsity);

/* variable: "v_re", "v_im", "p" or "q"; bus is a 0-based position. */
SPICE_API spice_status spice_solution_coefficient(const spice_solution* sol, const char* variable, size_t bus,
                                                  size_t term, double* value);
/* xi is count x dimension row-major; out receives count x buses row-major. */
SPICE_API spice_status spice_solution_evaluate(const spice_solution* sol, const char* variable, const double* xi,
                                               size_t count, double* out);

/* ---- batch commands ---- */

/* command: "spice", "pce-full", "mc", "ccopf" or "partition". config_json
   uses the run-config keys. On return *summary (if non-null) holds a JSON
   digest of the run, also when a CC-OPF loop stops at its iteration cap
   (status SPICE_ERR_NONCONVERGENCE). */
SPICE_API spice_status spice_run_command(const char* command, const char* config_json, char** summary);
/* TV table between two report files; output_path may be null. */
SPICE_API spice_status spice_compare_reports(const char* report_a, const char* report_b, const char* output_path,
                                             char** table);
/* Normalized config (defaults filled in) as JSON. */
SPICE_API spice_status spice_config_normalize(const char* config_json, char** out);

#ifdef __cplusplus
}
#endif

#endif /* SPICE_SPICE_H */
