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


#include "spilldid/spilldid.h"

#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "error.hpp"
#include "exposure.hpp"
#include "inference.hpp"
#include "panel.hpp"
#include "pipeline.hpp"
#include "report.hpp"
#include "simulate.hpp"

using namespace spilldid;

struct sd_panel {
  std::shared_ptr<const PanelDataset> ds;
};

struct sd_network {
  std::shared_ptr<const NetworkSpec> net;
};

struct sd_exposure {
  std::shared_ptr<const ExposurePath> path;
};

struct sd_result {
  std::shared_ptr<const PanelDataset> ds;
  std::shared_ptr<const ExposurePath> exposure;
  EstimationResult result;
  std::vector<std::string> names;  // component names backing record pointers
};

struct sd_mc_report {
  McReport report;
};

namespace {

thread_local std::string g_last_error;

sd_status fail(sd_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <typename F>
sd_status guard(F&& body) {
  try {
    body();
    g_last_error.clear();
    return SD_OK;
  } catch (const Error& e) {
    return fail(static_cast<sd_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return fail(SD_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SD_ERR_INTERNAL, e.what());
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw validation_error(std::string("null argument: ") + what);
}

std::vector<std::string> split_names(const char* text) {
  std::vector<std::string> out;
  if (!text) return out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto a = item.find_first_not_of(" \t");
    const auto b = item.find_last_not_of(" \t");
    if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
  }
  return out;
}

FirstStageKind to_first_stage(int v) {
  switch (v) {
    case SD_FIRST_STAGE_SATURATED: return FirstStageKind::kSaturated;
    case SD_FIRST_STAGE_STRUCTURED: return FirstStageKind::kStructured;
    case SD_FIRST_STAGE_DOSE: return FirstStageKind::kDose;
  }
  throw validation_error("unknown first-stage kind " + std::to_string(v));
}

KernelKind to_kernel(int v) {
  switch (v) {
    case SD_KERNEL_BARTLETT: return KernelKind::kBartlett;
    case SD_KERNEL_UNIFORM: return KernelKind::kUniform;
    case SD_KERNEL_TABULATED: return KernelKind::kTabulated;
  }
  throw validation_error("unknown kernel " + std::to_string(v));
}

Design to_design(int v) {
  switch (v) {
    case SD_DGP1: return Design::kDgp1;
    case SD_DGP2: return Design::kDgp2;
    case SD_DGP3: return Design::kDgp3;
  }
  throw validation_error("unknown design " + std::to_string(v));
}

EstimationOptions to_options(const sd_estimate_options& o) {
  EstimationOptions e;
  e.min_cell = o.min_cell;
  e.event_max = o.event_max;
  e.first_stage = to_first_stage(o.first_stage);
  e.spline_df = o.spline_df;
  e.inference = o.inference != 0;
  e.alpha = o.alpha;
  e.kernel = to_kernel(o.kernel);
  if (o.kernel_table_size > 0) {
    require(o.kernel_table_u && o.kernel_table_k, "kernel_table");
    for (int k = 0; k < o.kernel_table_size; ++k) {
      e.kernel_table.emplace_back(o.kernel_table_u[k], o.kernel_table_k[k]);
    }
  }
  if (o.bandwidth > 0.0) e.bandwidth = o.bandwidth;
  e.band_draws = o.band_draws;
  e.seed = o.seed;
  e.threads = o.threads;
  e.benchmarks = o.benchmarks != 0;
  e.local_pde = o.local_pde != 0;
  e.diagnostics = o.diagnostics != 0;
  e.strict_inference = o.strict_inference != 0;
  e.validate();
  return e;
}

DgpConfig to_dgp(const sd_simulate_options& o) {
  DgpConfig cfg = DgpConfig::make(to_design(o.design), o.n_units, o.seed);
  cfg.min_cell = o.min_cell;
  cfg.event_max = o.event_max;
  cfg.line_radius = o.line_radius;
  cfg.noise_scale = o.noise_scale;
  cfg.validate();
  return cfg;
}

McOptions to_mc(const sd_simulate_options& o) {
  McOptions m;
  m.replications = o.replications;
  m.threads = o.threads;
  m.alpha = o.alpha;
  m.kernel = to_kernel(o.kernel);
  if (o.bandwidth > 0.0) m.bandwidth = o.bandwidth;
  m.first_stage = to_first_stage(o.first_stage);
  m.keep_records = o.keep_records != 0;
  if (m.replications < 1) throw validation_error("replications must be >= 1");
  if (m.threads < 1) throw validation_error("threads must be >= 1");
  if (!(m.alpha > 0.0 && m.alpha < 1.0)) throw validation_error("alpha must be in (0, 1)");
  return m;
}

std::vector<McReport> collect(const sd_mc_report* const* reports, int n) {
  require(reports != nullptr || n == 0, "reports");
  std::vector<McReport> out;
  for (int k = 0; k < n; ++k) {
    require(reports[k], "report");
    out.push_back(reports[k]->report);
  }
  return out;
}

}  // namespace

extern "C" {

const char* sd_version(void) { return SPILLDID_VERSION; }

const char* sd_last_error(void) { return g_last_error.c_str(); }

sd_status sd_panel_load(const char* path, const char* basis_columns, int anticipation,
                        sd_panel** out) {
  return guard([&] {
    require(path && out, "path/out");
    *out = nullptr;
    if (!std::filesystem::exists(path)) {
      throw validation_error(std::string("panel not found: ") + path);
    }
    PanelSchema schema;
    schema.basis = split_names(basis_columns);
    auto ds = std::make_shared<PanelDataset>(load_panel(path, schema));
    ds->anticipation = anticipation;
    require_valid(*ds);
    *out = new sd_panel{std::move(ds)};
  });
}

sd_status sd_panel_save(const sd_panel* panel, const char* path) {
  return guard([&] {
    require(panel && path, "panel/path");
    save_panel(*panel->ds, path);
  });
}

int sd_panel_n_units(const sd_panel* panel) { return panel ? panel->ds->n_units : 0; }
int sd_panel_n_periods(const sd_panel* panel) { return panel ? panel->ds->n_periods : 0; }
int sd_panel_n_basis(const sd_panel* panel) {
  return panel ? static_cast<int>(panel->ds->basis.cols()) : 0;
}
void sd_panel_free(sd_panel* panel) { delete panel; }

sd_status sd_network_load(const char* path, const sd_panel* panel, double cutoff,
                          int row_normalize, sd_network** out) {
  return guard([&] {
    require(path && panel && out, "path/panel/out");
    *out = nullptr;
    if (!std::filesystem::exists(path)) {
      throw validation_error(std::string("network not found: ") + path);
    }
    NetworkOptions opt;
    opt.rule = cutoff > 0.0 ? DistanceRule::kCutoff : DistanceRule::kWeights;
    opt.cutoff = cutoff;
    opt.row_normalize = row_normalize != 0;
    auto net = std::make_shared<NetworkSpec>(load_network(path, panel->ds->unit_ids, opt));
    *out = new sd_network{std::move(net)};
  });
}

sd_status sd_network_line(int n_units, int radius, int row_normalize, sd_network** out) {
  return guard([&] {
    require(out, "out");
    *out = nullptr;
    if (n_units < 1 || radius < 1) throw validation_error("line network needs n >= 1, radius >= 1");
    auto net = std::make_shared<NetworkSpec>(line_network(n_units, row_normalize != 0, radius));
    *out = new sd_network{std::move(net)};
  });
}

sd_status sd_network_save(const sd_network* network, const sd_panel* panel, const char* path) {
  return guard([&] {
    require(network && panel && path, "network/panel/path");
    write_network_csv(*panel->ds, *network->net, path);
  });
}

void sd_network_free(sd_network* network) { delete network; }

sd_status sd_exposure_compute(const sd_panel* panel, const sd_network* network,
                              const char* coarsening, const double* psi, int n_psi,
                              sd_exposure** out) {
  return guard([&] {
    require(panel && network && out, "panel/network/out");
    *out = nullptr;
    const std::string kind = coarsening ? coarsening : "three_state";
    ExposureConfig cfg;
    if (kind == "three_state") cfg = ExposureConfig::three_state();
    else if (kind == "binary") cfg = ExposureConfig::binary();
    else throw validation_error("unknown coarsening '" + kind + "'");
    if (psi && n_psi > 0) cfg.kernel.assign(psi, psi + n_psi);
    cfg.validate();
    if (network->net->size() != panel->ds->n_units) {
      throw validation_error("network size does not match the panel");
    }
    auto path = std::make_shared<ExposurePath>(build_exposure(*panel->ds, *network->net, cfg));
    *out = new sd_exposure{std::move(path)};
  });
}

sd_status sd_exposure_write(const sd_exposure* exposure, const sd_panel* panel,
                            const char* path) {
  return guard([&] {
    require(exposure && panel && path, "exposure/panel/path");
    write_exposure_csv(*panel->ds, *exposure->path, path);
  });
}

int sd_exposure_state(const sd_exposure* exposure, int unit, int period) {
  if (!exposure) return -1;
  const auto& s = exposure->path->state;
  if (unit < 0 || unit >= s.rows() || period < 1 || period > s.cols()) return -1;
  return s(unit, period - 1);
}

void sd_exposure_free(sd_exposure* exposure) { delete exposure; }

void sd_estimate_options_default(sd_estimate_options* options) {
  if (!options) return;
  const EstimationOptions e;
  *options = sd_estimate_options{};
  options->min_cell = e.min_cell;
  options->event_max = e.event_max;
  options->first_stage = SD_FIRST_STAGE_SATURATED;
  options->spline_df = e.spline_df;
  options->inference = e.inference;
  options->alpha = e.alpha;
  options->kernel = SD_KERNEL_BARTLETT;
  options->bandwidth = 0.0;
  options->band_draws = e.band_draws;
  options->seed = e.seed;
  options->threads = e.threads;
  options->benchmarks = e.benchmarks;
  options->local_pde = e.local_pde;
  options->diagnostics = e.diagnostics;
  options->strict_inference = e.strict_inference;
}

sd_status sd_estimate(const sd_panel* panel, const sd_exposure* exposure,
                      const sd_network* network, const sd_estimate_options* options,
                      sd_result** out) {
  return guard([&] {
    require(panel && exposure && network && options && out, "argument");
    *out = nullptr;
    const EstimationOptions opt = to_options(*options);
    const DistanceSource dist = DistanceSource::from_network(*network->net);
    auto r = std::make_unique<sd_result>();
    r->ds = panel->ds;
    r->exposure = exposure->path;
    r->result = estimate_all(*panel->ds, *exposure->path, dist, opt);
    for (const auto& c : r->result.cells) r->names.emplace_back(component_name(c.component));
    for (const auto& e : r->result.event_time) {
      r->names.emplace_back(component_name(e.component));
    }
    *out = r.release();
  });
}

int sd_result_n_cells(const sd_result* result) {
  return result ? static_cast<int>(result->result.cells.size()) : 0;
}

sd_status sd_result_cell(const sd_result* result, int index, sd_cell_record* out) {
  return guard([&] {
    require(result && out, "result/out");
    const auto& cells = result->result.cells;
    if (index < 0 || index >= static_cast<int>(cells.size())) {
      throw validation_error("cell index out of range");
    }
    const auto& c = cells[index];
    *out = sd_cell_record{};
    out->component = result->names[index].c_str();
    out->g = c.g;
    out->l = c.l;
    out->t = c.t;
    out->value = c.value;
    out->admissible = c.admissible;
    out->note = c.note.c_str();
    out->n_target = c.n_target;
    out->target_mass_retained = c.target_mass_retained;
    out->has_ci = c.ci.has_value();
    if (c.ci) {
      out->se = c.ci->se;
      out->ci_lo = c.ci->lo;
      out->ci_hi = c.ci->hi;
    }
  });
}

int sd_result_n_events(const sd_result* result) {
  return result ? static_cast<int>(result->result.event_time.size()) : 0;
}

sd_status sd_result_event(const sd_result* result, int index, sd_event_record* out) {
  return guard([&] {
    require(result && out, "result/out");
    const auto& events = result->result.event_time;
    if (index < 0 || index >= static_cast<int>(events.size())) {
      throw validation_error("event index out of range");
    }
    const auto& e = events[index];
    *out = sd_event_record{};
    out->component = result->names[result->result.cells.size() + index].c_str();
    out->l = e.l;
    out->value = e.value;
    out->admissible = e.admissible;
    out->note = e.note.c_str();
    out->n_cohorts = static_cast<int>(e.cohorts.size());
    out->has_ci = e.ci.has_value();
    if (e.ci) {
      out->se = e.ci->se;
      out->ci_lo = e.ci->lo;
      out->ci_hi = e.ci->hi;
    }
    out->has_band = e.band.has_value();
    if (e.band) {
      out->band_lo = e.band->lo;
      out->band_hi = e.band->hi;
    }
  });
}

int sd_result_n_warnings(const sd_result* result) {
  return result ? static_cast<int>(result->result.warnings.size()) : 0;
}

const char* sd_result_warning(const sd_result* result, int index) {
  if (!result || index < 0 || index >= static_cast<int>(result->result.warnings.size())) {
    return nullptr;
  }
  return result->result.warnings[index].c_str();
}

double sd_result_bandwidth(const sd_result* result) {
  return result ? result->result.bandwidth : 0.0;
}

sd_status sd_result_write_estimates(const sd_result* result, const char* path) {
  return guard([&] {
    require(result && path, "result/path");
    write_estimates_csv(result->result, path);
  });
}

sd_status sd_result_write_support(const sd_result* result, const char* path) {
  return guard([&] {
    require(result && path, "result/path");
    write_support_csv(result->result, *result->ds, *result->exposure, path);
  });
}

sd_status sd_result_write_benchmark(const sd_result* result, const char* path) {
  return guard([&] {
    require(result && path, "result/path");
    write_benchmark_csv(result->result, path);
  });
}

void sd_result_free(sd_result* result) { delete result; }

void sd_simulate_options_default(sd_simulate_options* options) {
  if (!options) return;
  const McOptions m;
  const DgpConfig d;
  *options = sd_simulate_options{};
  options->design = SD_DGP1;
  options->n_units = d.n_units;
  options->replications = m.replications;
  options->seed = d.seed;
  options->threads = m.threads;
  options->alpha = m.alpha;
  options->kernel = SD_KERNEL_BARTLETT;
  options->bandwidth = 0.0;
  options->first_stage = SD_FIRST_STAGE_DOSE;
  options->keep_records = m.keep_records;
  options->min_cell = d.min_cell;
  options->event_max = d.event_max;
  options->line_radius = d.line_radius;
  options->noise_scale = d.noise_scale;
}

sd_status sd_simulate(const sd_simulate_options* options, sd_mc_report** out) {
  return guard([&] {
    require(options && out, "options/out");
    *out = nullptr;
    const DgpConfig cfg = to_dgp(*options);
    const McOptions mc = to_mc(*options);
    *out = new sd_mc_report{run_monte_carlo(cfg, mc)};
  });
}

sd_status sd_mc_report_row(const sd_mc_report* report, const char* method, const char* target,
                           sd_mc_row* out) {
  return guard([&] {
    require(report && method && target && out, "argument");
    const McRow* row = report->report.row(method, target);
    if (!row) {
      throw validation_error(std::string("no row for ") + method + " / " + target);
    }
    *out = sd_mc_row{row->bias,        row->rmse,      row->coverage, row->availability,
                     row->n_available, row->n_with_ci, row->n_records};
  });
}

int sd_mc_report_failures(const sd_mc_report* report) {
  return report ? report->report.failures : 0;
}

sd_status sd_mc_write_summary(const sd_mc_report* const* reports, int n_reports,
                              const char* path) {
  return guard([&] {
    require(path, "path");
    write_mc_csv(collect(reports, n_reports), path);
  });
}

sd_status sd_mc_write_tables(const sd_mc_report* const* reports, int n_reports,
                             const char* path) {
  return guard([&] {
    require(path, "path");
    const std::string text = format_mc_tables(collect(reports, n_reports));
    std::ofstream f(path);
    if (!f) throw io_error(std::string("cannot write '") + path + "'");
    f << text;
    if (!f) throw io_error(std::string("write failed for '") + path + "'");
  });
}

sd_status sd_mc_write_records(const sd_mc_report* report, const char* path) {
  return guard([&] {
    require(report && path, "report/path");
    write_mc_records_csv(report->report, path);
  });
}

void sd_mc_report_free(sd_mc_report* report) { delete report; }

sd_status sd_simulate_draw(const sd_simulate_options* options, int replication,
                           sd_panel** panel, sd_network** network) {
  return guard([&] {
    require(options && panel && network, "argument");
    *panel = nullptr;
    *network = nullptr;
    if (replication < 0) throw validation_error("replication must be >= 0");
    DgpDraw draw = generate_dgp(to_dgp(*options), replication);
    auto p = std::make_unique<sd_panel>(
        sd_panel{std::make_shared<PanelDataset>(std::move(draw.panel))});
    auto n = std::make_unique<sd_network>(
        sd_network{std::make_shared<NetworkSpec>(std::move(draw.network))});
    *panel = p.release();
    *network = n.release();
  });
}

}  // extern "C"
