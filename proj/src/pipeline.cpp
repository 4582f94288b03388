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


#include "pipeline.hpp"

#include <cmath>
#include <map>
#include <set>

#include "error.hpp"

namespace spilldid {

void EstimationOptions::validate() const {
  if (min_cell < 1) throw validation_error("min_cell must be >= 1");
  if (event_max < 0) throw validation_error("event_max must be >= 0");
  if (spline_df < 1) throw validation_error("spline_df must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw validation_error("alpha must be in (0, 1)");
  if (bandwidth && !(*bandwidth > 0.0)) throw validation_error("bandwidth must be positive");
  if (band_draws < 0) throw validation_error("band_draws must be >= 0");
  if (threads < 1) throw validation_error("threads must be >= 1");
  ShacConfig cfg{kernel, 1.0, kernel_table};
  cfg.validate();
}

double default_bandwidth(int n_units) {
  return std::ceil(std::cbrt(static_cast<double>(n_units)));
}

const ComponentEstimate* EstimationResult::find(Component c, int g, int l) const {
  for (const auto& e : cells) {
    if (e.component == c && e.g == g && e.l == l) return &e;
  }
  return nullptr;
}

const EventTimeEstimate* EstimationResult::find_event(Component c, int l) const {
  for (const auto& e : event_time) {
    if (e.component == c && e.l == l) return &e;
  }
  return nullptr;
}

FirstStageFit fit_first_stage(const PanelDataset& ds, const ExposurePath& exposure,
                              const EstimationOptions& options) {
  if (options.first_stage == FirstStageKind::kStructured) {
    return fit_cse_structured(ds, exposure, options.min_cell, options.spline_df);
  }
  if (options.first_stage == FirstStageKind::kDose) {
    return fit_cse_dose(ds, exposure, options.min_cell);
  }
  return fit_cse_saturated(ds, exposure, options.min_cell);
}

namespace {

EventTimeEstimate* find_event_mut(std::vector<EventTimeEstimate>& events, Component c, int l) {
  for (auto& e : events) {
    if (e.component == c && e.l == l) return &e;
  }
  return nullptr;
}

Eigen::VectorXd unit_vector(int size, int k) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(size);
  v(k) = 1.0;
  return v;
}

// Collects gradient columns and where to write the resulting intervals.
struct GradientSet {
  std::vector<Eigen::VectorXd> columns;
  std::vector<ComponentEstimate*> cell_target;
  std::vector<EventTimeEstimate*> event_target;
  std::vector<std::string> labels;

  void add(Eigen::VectorXd grad, ComponentEstimate* cell, EventTimeEstimate* event,
           std::string label) {
    columns.push_back(std::move(grad));
    cell_target.push_back(cell);
    event_target.push_back(event);
    labels.push_back(std::move(label));
  }
  Eigen::MatrixXd matrix(int p) const {
    Eigen::MatrixXd g(p, static_cast<Eigen::Index>(columns.size()));
    for (std::size_t k = 0; k < columns.size(); ++k) g.col(static_cast<Eigen::Index>(k)) = columns[k];
    return g;
  }
};

void assign_intervals(const GradientSet& set, const Eigen::MatrixXd& gamma, int n,
                      double alpha) {
  for (std::size_t k = 0; k < set.columns.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    if (set.cell_target[k]) {
      set.cell_target[k]->ci = pointwise_ci(set.cell_target[k]->value, gamma(kk, kk), n, alpha);
    }
    if (set.event_target[k]) {
      set.event_target[k]->ci =
          pointwise_ci(set.event_target[k]->value, gamma(kk, kk), n, alpha);
    }
  }
}

struct Context {
  const PanelDataset& ds;
  const ExposurePath& exposure;
  const DistanceSource& distance;
  const EstimationOptions& options;
  const FirstStageFit& fit;
  ShacConfig shac;
  EstimationResult& result;
};

std::vector<int> event_times(const EstimationOptions& options) {
  std::vector<int> ls;
  for (int l = 0; l <= options.event_max; ++l) ls.push_back(l);
  return ls;
}

void proposal_inference(Context& cx) {
  auto& cells = cx.result.cells;
  StackInput in;
  in.fit = &cx.fit;
  std::map<std::pair<int, int>, std::size_t> dse_index, cse_index;
  std::map<Period, std::size_t> never_index;
  for (const auto& e : cells) {
    if (e.component == Component::kDSE && e.admissible) {
      dse_index[{e.g, e.l}] = in.contrasts.size();
      in.contrasts.push_back(dse_contrast(cx.ds, cx.exposure, *e.support));
      in.contrast_values.push_back(e.value);
    }
  }
  for (const auto& e : cells) {
    if (e.component == Component::kCSE && e.admissible) {
      cse_index[{e.g, e.l}] = in.spillovers.size();
      in.spillovers.push_back({e.g, e.l, e.t});
      in.spillover_values.push_back(e.value);
    }
  }
  for (const auto& e : cells) {
    if (e.component == Component::kCSENeverTreated && e.admissible) {
      never_index[e.t] = in.spillovers.size();
      in.spillovers.push_back({kNeverTreated, 0, e.t});
      in.spillover_values.push_back(e.value);
    }
  }
  std::set<int> share_set;
  for (const auto& ev : cx.result.event_time) {
    for (int g : ev.cohorts) share_set.insert(g);
  }
  in.share_cohorts.assign(share_set.begin(), share_set.end());
  if (in.contrasts.empty() && in.spillovers.empty()) return;

  const StackedSystem sys(cx.ds, cx.exposure, std::move(in));
  const int p = sys.n_params();
  GradientSet set;
  for (auto& e : cells) {
    if (!e.admissible) continue;
    const std::pair<int, int> key{e.g, e.l};
    switch (e.component) {
      case Component::kDSE:
        set.add(unit_vector(p, sys.contrast_index(dse_index.at(key))), &e, nullptr, "");
        break;
      case Component::kCSE:
        set.add(unit_vector(p, sys.spillover_index(cse_index.at(key))), &e, nullptr, "");
        break;
      case Component::kDTE:
        set.add(unit_vector(p, sys.contrast_index(dse_index.at(key))) +
                    unit_vector(p, sys.spillover_index(cse_index.at(key))),
                &e, nullptr, "");
        break;
      case Component::kCSENeverTreated:
        set.add(unit_vector(p, sys.spillover_index(never_index.at(e.t))), &e, nullptr, "");
        break;
      case Component::kDeltaCSENeverTreated: {
        const Period t0 = baseline_period(e.g, cx.ds.anticipation);
        set.add(unit_vector(p, sys.spillover_index(never_index.at(e.g))) -
                    unit_vector(p, sys.spillover_index(never_index.at(t0))),
                &e, nullptr, "");
        break;
      }
      default: break;
    }
  }
  const std::size_t first_event = set.columns.size();
  for (int l : event_times(cx.options)) {
    auto* dse = find_event_mut(cx.result.event_time, Component::kDSE, l);
    if (!dse || !dse->admissible) continue;
    std::vector<int> dse_idx, cse_idx, share_idx;
    for (int g : dse->cohorts) {
      dse_idx.push_back(sys.contrast_index(dse_index.at({g, l})));
      cse_idx.push_back(sys.spillover_index(cse_index.at({g, l})));
      share_idx.push_back(sys.share_index(g));
    }
    const Eigen::VectorXd gd = aggregation_gradient(sys, dse_idx, share_idx);
    const Eigen::VectorXd gc = aggregation_gradient(sys, cse_idx, share_idx);
    const std::string suffix = ":" + std::to_string(l);
    set.add(gd, nullptr, dse, "DSE" + suffix);
    set.add(gc, nullptr, find_event_mut(cx.result.event_time, Component::kCSE, l),
            "CSE" + suffix);
    set.add(gd + gc, nullptr, find_event_mut(cx.result.event_time, Component::kDTE, l),
            "DTE" + suffix);
  }
  const Eigen::MatrixXd rows = sys.influence(set.matrix(p));
  const Eigen::MatrixXd gamma =
      shac_covariance(rows, cx.distance, cx.shac, cx.options.threads);
  assign_intervals(set, gamma, cx.ds.n_units, cx.options.alpha);

  const auto n_event = static_cast<Eigen::Index>(set.columns.size() - first_event);
  const auto first = static_cast<Eigen::Index>(first_event);
  cx.result.event_rows = rows.rightCols(n_event);
  cx.result.event_cov = gamma.block(first, first, n_event, n_event);
  cx.result.event_labels.assign(set.labels.begin() + first, set.labels.end());

  if (cx.options.band_draws == 0) return;
  const Component comps[] = {Component::kDSE, Component::kCSE, Component::kDTE};
  for (int q = 0; q < 3; ++q) {
    std::vector<Eigen::Index> idx;
    std::vector<double> values;
    std::vector<EventTimeEstimate*> targets;
    for (Eigen::Index k = 0; k < n_event; ++k) {
      if (static_cast<int>(k % 3) != q) continue;
      idx.push_back(k);
      targets.push_back(set.event_target[first_event + k]);
      values.push_back(targets.back()->value);
    }
    if (idx.empty()) continue;
    Eigen::MatrixXd sub(idx.size(), idx.size());
    for (std::size_t a = 0; a < idx.size(); ++a) {
      for (std::size_t b = 0; b < idx.size(); ++b) {
        sub(a, b) = cx.result.event_cov(idx[a], idx[b]);
      }
    }
    try {
      const BandResult band = simultaneous_band(values, sub, cx.ds.n_units, cx.options.alpha,
                                                cx.options.band_draws, cx.options.seed + q);
      if (band.projected) {
        cx.result.warnings.push_back(std::string(component_name(comps[q])) +
                                     " band: covariance projected to PSD");
      }
      for (std::size_t a = 0; a < targets.size(); ++a) targets[a]->band = band.intervals[a];
    } catch (const Error& err) {
      cx.result.warnings.push_back(std::string(component_name(comps[q])) +
                                   " band not reported: " + err.what());
    }
  }
}

void benchmark_inference(Context& cx) {
  auto& cells = cx.result.cells;
  StackInput in;
  std::map<std::pair<int, int>, std::size_t> index;
  for (const auto& e : cells) {
    if (e.component == Component::kDIDBenchmark && e.admissible) {
      index[{e.g, e.l}] = in.contrasts.size();
      in.contrasts.push_back(did_contrast(cx.ds, e.g, e.l));
      in.contrast_values.push_back(e.value);
    }
  }
  if (in.contrasts.empty()) return;
  in.share_cohorts = cx.ds.target_cohorts();
  const StackedSystem sys(cx.ds, cx.exposure, std::move(in));
  const int p = sys.n_params();
  GradientSet did, cs;
  for (auto& e : cells) {
    if (!e.admissible) continue;
    if (e.component != Component::kDIDBenchmark && e.component != Component::kCSBenchmark) {
      continue;
    }
    auto& set = e.component == Component::kDIDBenchmark ? did : cs;
    set.add(unit_vector(p, sys.contrast_index(index.at({e.g, e.l}))), &e, nullptr, "");
  }
  for (int l : event_times(cx.options)) {
    for (Component c : {Component::kDIDBenchmark, Component::kCSBenchmark}) {
      auto* ev = find_event_mut(cx.result.event_time, c, l);
      if (!ev || !ev->admissible) continue;
      std::vector<int> t_idx, s_idx;
      for (int g : ev->cohorts) {
        t_idx.push_back(sys.contrast_index(index.at({g, l})));
        s_idx.push_back(sys.share_index(g));
      }
      (c == Component::kDIDBenchmark ? did : cs)
          .add(aggregation_gradient(sys, t_idx, s_idx), nullptr, ev, "");
    }
  }
  if (!did.columns.empty()) {
    const Eigen::MatrixXd rows = sys.influence(did.matrix(p));
    assign_intervals(did, shac_covariance(rows, cx.distance, cx.shac, cx.options.threads),
                     cx.ds.n_units, cx.options.alpha);
  }
  if (!cs.columns.empty()) {
    const Eigen::MatrixXd rows = sys.influence(cs.matrix(p));
    assign_intervals(cs, self_pair_covariance(rows), cx.ds.n_units, cx.options.alpha);
  }
}

void local_pde_inference(Context& cx) {
  StackInput in;
  std::vector<ComponentEstimate*> targets;
  for (auto& e : cx.result.cells) {
    if (e.component == Component::kLocalPDE && e.admissible) {
      in.contrasts.push_back(local_pde_contrast(cx.ds, cx.exposure, e.g, e.l));
      in.contrast_values.push_back(e.value);
      targets.push_back(&e);
    }
  }
  if (targets.empty()) return;
  const StackedSystem sys(cx.ds, cx.exposure, std::move(in));
  GradientSet set;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    set.add(unit_vector(sys.n_params(), sys.contrast_index(k)), targets[k], nullptr, "");
  }
  const Eigen::MatrixXd rows = sys.influence(set.matrix(sys.n_params()));
  assign_intervals(set, shac_covariance(rows, cx.distance, cx.shac, cx.options.threads),
                   cx.ds.n_units, cx.options.alpha);
}

template <typename F>
void guarded(Context& cx, const char* what, F&& f) {
  try {
    f(cx);
  } catch (const Error& err) {
    if (cx.options.strict_inference || err.code() != ErrorCode::kInference) throw;
    cx.result.warnings.push_back(std::string(what) + " intervals not reported: " + err.what());
  }
}

}  // namespace

EstimationResult estimate_all(const PanelDataset& ds, const ExposurePath& exposure,
                              const DistanceSource& distance,
                              const EstimationOptions& options) {
  options.validate();
  require_valid(ds);
  if (exposure.raw.rows() != ds.n_units || exposure.raw.cols() != ds.n_periods) {
    throw validation_error("exposure path does not match the panel dimensions");
  }
  const std::vector<int> cohorts = ds.target_cohorts();
  if (cohorts.empty()) throw validation_error("panel has no treated target cohort");
  const FirstStageFit fit = fit_first_stage(ds, exposure, options);

  EstimationResult result;
  result.n_units = ds.n_units;
  result.bandwidth = options.bandwidth.value_or(default_bandwidth(ds.n_units));
  auto& cells = result.cells;
  for (int g : cohorts) {
    for (int l = -1; l <= options.event_max && g + l <= ds.n_periods; ++l) {
      if (l < 0) {
        cells.push_back(estimate_cse(fit, ds, exposure, g, l));
        continue;
      }
      RetainedSupport support = dse_support(ds, exposure, g, l, options.min_cell);
      ComponentEstimate dse = estimate_dse(ds, exposure, support);
      ComponentEstimate cse = estimate_cse(fit, ds, exposure, g, l);
      ComponentEstimate dte = estimate_dte(dse, cse);
      result.supports.push_back(std::move(support));
      cells.push_back(std::move(dse));
      cells.push_back(std::move(cse));
      cells.push_back(std::move(dte));
      if (options.local_pde) {
        cells.push_back(estimate_local_pde(ds, exposure, g, l, options.min_cell));
      }
      if (options.benchmarks) {
        cells.push_back(did_benchmark(ds, g, l));
        cells.push_back(cs_att_benchmark(ds, g, l));
      }
    }
  }
  if (options.diagnostics) {
    for (Period t = 1; t <= ds.n_periods; ++t) {
      cells.push_back(estimate_cse_never_treated(fit, ds, exposure, t));
    }
    for (int g : cohorts) {
      if (g - ds.anticipation - 1 >= 1) {
        cells.push_back(cse_never_treated_change(fit, ds, exposure, g));
      }
    }
  }
  for (int l : event_times(options)) {
    for (auto& ev : aggregate_event_time(cells, l)) result.event_time.push_back(std::move(ev));
  }

  if (options.inference) {
    Context cx{ds, exposure, distance, options, fit,
               ShacConfig{options.kernel, result.bandwidth, options.kernel_table}, result};
    if (distance.size() != ds.n_units) {
      throw validation_error("distance source does not match the panel size");
    }
    if (options.kernel == KernelKind::kUniform) {
      result.warnings.push_back("uniform kernel is not positive semidefinite; "
                                "bartlett is recommended");
    }
    guarded(cx, "proposal", proposal_inference);
    if (options.benchmarks) guarded(cx, "benchmark", benchmark_inference);
    if (options.local_pde) guarded(cx, "local PDE", local_pde_inference);
  }
  return result;
}

}  // namespace spilldid
