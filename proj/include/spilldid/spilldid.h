// Copyright 2026 The spilldid Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef SPILLDID_SPILLDID_H_
#define SPILLDID_SPILLDID_H_

#include <stddef.h>
#include <stdint.h>

#if defined(SPILLDID_BUILDING_LIBRARY)
#define SD_API __attribute__((visibility("default")))
#else
#define SD_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Nonzero values match the command-line exit codes. */
typedef enum sd_status {
  SD_OK = 0,
  SD_ERR_VALIDATION = 2,
  SD_ERR_INFERENCE = 3,
  SD_ERR_IO = 4,
  SD_ERR_INTERNAL = 5
} sd_status;

typedef enum sd_first_stage {
  SD_FIRST_STAGE_SATURATED = 0,
  SD_FIRST_STAGE_STRUCTURED = 1,
  SD_FIRST_STAGE_DOSE = 2
} sd_first_stage;

typedef enum sd_kernel {
  SD_KERNEL_BARTLETT = 0,
  SD_KERNEL_UNIFORM = 1,
  SD_KERNEL_TABULATED = 2
} sd_kernel;

typedef enum sd_design { SD_DGP1 = 1, SD_DGP2 = 2, SD_DGP3 = 3 } sd_design;

typedef struct sd_panel sd_panel;
typedef struct sd_network sd_network;
typedef struct sd_exposure sd_exposure;
typedef struct sd_result sd_result;
typedef struct sd_mc_report sd_mc_report;

SD_API const char* sd_version(void);

/* Constructors store their handle in *out; on failure *out is set to NULL. */

/* Message for the most recent failed call on this thread; "" when none. */
SD_API const char* sd_last_error(void);

/* Panel ---------------------------------------------------------------- */

/* basis_columns: comma-separated basis column names, or NULL for v1, v2, ...
   anticipation: delta, so the baseline period is g - delta - 1. */
SD_API sd_status sd_panel_load(const char* path, const char* basis_columns,
                               int anticipation, sd_panel** out);
SD_API sd_status sd_panel_save(const sd_panel* panel, const char* path);
SD_API int sd_panel_n_units(const sd_panel* panel);
SD_API int sd_panel_n_periods(const sd_panel* panel);
SD_API int sd_panel_n_basis(const sd_panel* panel);
SD_API void sd_panel_free(sd_panel* panel);

/* Network -------------------------------------------------------------- */

/* Edge list (i, j[, weight]) or dense unit-by-unit matrix. When cutoff > 0 a
   matrix is read as distances and neighbors are 0 < d <= cutoff; otherwise
   entries are weights. A missing file fails with SD_ERR_VALIDATION and the
   message "network not found". */
SD_API sd_status sd_network_load(const char* path, const sd_panel* panel, double cutoff,
                                 int row_normalize, sd_network** out);
/* Open line over n units in panel order, neighbors within radius steps. */
SD_API sd_status sd_network_line(int n_units, int radius, int row_normalize,
                                 sd_network** out);
SD_API sd_status sd_network_save(const sd_network* network, const sd_panel* panel,
                                 const char* path);
SD_API void sd_network_free(sd_network* network);

/* Exposure ------------------------------------------------------------- */

/* coarsening: "three_state" (0, low, high) or "binary" (0, positive).
   psi: temporal kernel by event-time lag, last entry repeats; NULL means {1}. */
SD_API sd_status sd_exposure_compute(const sd_panel* panel, const sd_network* network,
                                     const char* coarsening, const double* psi, int n_psi,
                                     sd_exposure** out);
SD_API sd_status sd_exposure_write(const sd_exposure* exposure, const sd_panel* panel,
                                   const char* path);
/* State label index of (unit, period), period in 1..T; -1 when out of range. */
SD_API int sd_exposure_state(const sd_exposure* exposure, int unit, int period);
SD_API void sd_exposure_free(sd_exposure* exposure);

/* Estimation ----------------------------------------------------------- */

typedef struct sd_estimate_options {
  int min_cell;
  int event_max;
  int first_stage; /* sd_first_stage */
  int spline_df;
  int inference;
  double alpha;
  int kernel; /* sd_kernel */
  const double* kernel_table_u; /* with SD_KERNEL_TABULATED */
  const double* kernel_table_k;
  int kernel_table_size;
  double bandwidth; /* <= 0: ceil(N^(1/3)) */
  int band_draws;
  uint64_t seed;
  int threads;
  int benchmarks;
  int local_pde;
  int diagnostics;
  int strict_inference;
} sd_estimate_options;

SD_API void sd_estimate_options_default(sd_estimate_options* options);

/* SHAC distances come from the network: distance matrix, line positions,
   then hop counts. */
SD_API sd_status sd_estimate(const sd_panel* panel, const sd_exposure* exposure,
                             const sd_network* network, const sd_estimate_options* options,
                             sd_result** out);

typedef struct sd_cell_record {
  const char* component; /* DSE, CSE, DTE, localPDE, DIDbench, CSbench, ... */
  int g;                 /* 0 for never-treated diagnostics */
  int l;
  int t;
  double value;
  int admissible;
  const char* note;
  int n_target;
  double target_mass_retained;
  int has_ci;
  double se;
  double ci_lo;
  double ci_hi;
} sd_cell_record;

typedef struct sd_event_record {
  const char* component;
  int l;
  double value;
  int admissible;
  const char* note;
  int n_cohorts;
  int has_ci;
  double se;
  double ci_lo;
  double ci_hi;
  int has_band;
  double band_lo;
  double band_hi;
} sd_event_record;

SD_API int sd_result_n_cells(const sd_result* result);
SD_API sd_status sd_result_cell(const sd_result* result, int index, sd_cell_record* out);
SD_API int sd_result_n_events(const sd_result* result);
SD_API sd_status sd_result_event(const sd_result* result, int index, sd_event_record* out);
SD_API int sd_result_n_warnings(const sd_result* result);
SD_API const char* sd_result_warning(const sd_result* result, int index);
SD_API double sd_result_bandwidth(const sd_result* result);
SD_API sd_status sd_result_write_estimates(const sd_result* result, const char* path);
SD_API sd_status sd_result_write_support(const sd_result* result, const char* path);
SD_API sd_status sd_result_write_benchmark(const sd_result* result, const char* path);
SD_API void sd_result_free(sd_result* result);

/* Monte Carlo ---------------------------------------------------------- */

typedef struct sd_simulate_options {
  int design; /* sd_design */
  int n_units;
  int replications;
  uint64_t seed;
  int threads;
  double alpha;
  int kernel;
  double bandwidth; /* <= 0: ceil(N^(1/3)) */
  int first_stage;
  int keep_records;
  int min_cell;
  int event_max;
  int line_radius;
  double noise_scale;
} sd_simulate_options;

SD_API void sd_simulate_options_default(sd_simulate_options* options);

SD_API sd_status sd_simulate(const sd_simulate_options* options, sd_mc_report** out);

typedef struct sd_mc_row {
  double bias;
  double rmse;
  double coverage;
  double availability;
  int n_available;
  int n_with_ci;
  int n_records;
} sd_mc_row;

/* method: "Proposed DSE", "Proposed CSE", "Proposed DTE", "Standard DID" or
   "Callaway and Sant'Anna"; target: "DSE", "CSE" or "DTE". */
SD_API sd_status sd_mc_report_row(const sd_mc_report* report, const char* method,
                                  const char* target, sd_mc_row* out);
SD_API int sd_mc_report_failures(const sd_mc_report* report);
SD_API sd_status sd_mc_write_summary(const sd_mc_report* const* reports, int n_reports,
                                     const char* path);
SD_API sd_status sd_mc_write_tables(const sd_mc_report* const* reports, int n_reports,
                                    const char* path);
SD_API sd_status sd_mc_write_records(const sd_mc_report* report, const char* path);
SD_API void sd_mc_report_free(sd_mc_report* report);

/* One simulated draw as data: panel and line network for replication rep. */
SD_API sd_status sd_simulate_draw(const sd_simulate_options* options, int replication,
                                  sd_panel** panel, sd_network** network);

#ifdef __cplusplus
}
#endif

#endif /* SPILLDID_SPILLDID_H_ */
