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


#include "estimators.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "error.hpp"

namespace spilldid {

std::string_view component_name(Component c) {
  switch (c) {
    case Component::kDSE: return "DSE";
    case Component::kCSE: return "CSE";
    case Component::kDTE: return "DTE";
    case Component::kLocalPDE: return "localPDE";
    case Component::kDIDBenchmark: return "DIDbench";
    case Component::kCSBenchmark: return "CSbench";
    case Component::kCSENeverTreated: return "CSEneverT";
    case Component::kDeltaCSENeverTreated: return "DeltaCSEneverT";
  }
  return "?";
}

CohortMass cohort_mass(const PanelDataset& ds, int g) {
  CohortMass m;
  for (int i = 0; i < ds.n_units; ++i) {
    if (ds.in_cohort(i, g)) {
      m.n += 1;
      m.w += ds.weight[i];
    }
  }
  return m;
}

namespace {

CohortMass source_mass(const PanelDataset& ds) {
  CohortMass m;
  for (int i = 0; i < ds.n_units; ++i) {
    if (ds.in_source(i)) {
      m.n += 1;
      m.w += ds.weight[i];
    }
  }
  return m;
}

struct Periods {
  Period t;
  Period t0;
};

// Target and baseline periods for a post-adoption contrast at (g, l).
Periods contrast_periods(const PanelDataset& ds, int g, int l) {
  if (g == kNeverTreated) throw validation_error("cohort must not be never-treated");
  if (l < 0) throw validation_error("contrast requires event time l >= 0");
  const Period t0 = baseline_period(g, ds.anticipation);
  const Period t = g + l;
  if (t > ds.n_periods) {
    throw validation_error("period g+l=" + std::to_string(t) + " exceeds T=" +
                           std::to_string(ds.n_periods));
  }
  return {t, t0};
}

void require_groups(const PanelDataset& ds, int g) {
  if (cohort_mass(ds, g).n == 0) {
    throw validation_error("cohort " + std::to_string(g) + " is empty");
  }
  if (source_mass(ds).n == 0) throw validation_error("never-treated pool is empty");
}

struct WeightedMean {
  double sum = 0.0;
  double w = 0.0;
  int n = 0;
  void add(double weight, double v) {
    sum += weight * v;
    w += weight;
    n += 1;
  }
  double mean() const { return sum / w; }
};

ComponentEstimate base_estimate(Component c, int g, int l, Period t) {
  ComponentEstimate e;
  e.component = c;
  e.g = g;
  e.l = l;
  e.t = t;
  return e;
}

}  // namespace

CellKey cell_key(const PanelDataset& ds, const ExposurePath& exposure, int unit,
                 Period t, Period t0) {
  return {ds.stratum[unit], exposure.at(unit, t), exposure.at(unit, t0)};
}

RetainedSupport dse_support(const PanelDataset& ds, const ExposurePath& exposure,
                            int g, int l, int min_cell) {
  if (min_cell < 1) throw validation_error("min_cell must be >= 1");
  const auto [t, t0] = contrast_periods(ds, g, l);
  require_groups(ds, g);
  std::map<CellKey, SupportCell> cells;
  for (int i = 0; i < ds.n_units; ++i) {
    const bool target = ds.in_cohort(i, g);
    const bool source = ds.in_source(i);
    if (!target && !source) continue;
    const CellKey key = cell_key(ds, exposure, i, t, t0);
    auto& c = cells[key];
    c.key = key;
    if (target) {
      c.n_target += 1;
      c.w_target += ds.weight[i];
    } else {
      c.n_source += 1;
      c.w_source += ds.weight[i];
    }
  }
  RetainedSupport s;
  s.g = g;
  s.l = l;
  s.t = t;
  s.t0 = t0;
  s.min_cell = min_cell;
  double retained = 0.0;
  for (const auto& [key, c] : cells) {
    s.n_target += c.n_target;
    s.w_target += c.w_target;
    if (c.n_target == 0) continue;
    if (c.n_target >= min_cell && c.n_source >= min_cell) {
      s.cells.push_back(c);
      retained += c.w_target;
    } else {
      s.dropped.push_back(c);
    }
  }
  s.target_mass_retained = retained / s.w_target;
  s.all_mass_retained = s.dropped.empty();
  return s;
}

ComponentEstimate estimate_dse(const PanelDataset& ds, const ExposurePath& exposure,
                               const RetainedSupport& support) {
  ComponentEstimate e = base_estimate(Component::kDSE, support.g, support.l, support.t);
  e.n_target = support.n_target;
  e.w_target = support.w_target;
  e.target_mass_retained = support.target_mass_retained;
  e.support = support;
  if (!support.all_mass_retained) {
    e.note = "retained support misses cohort mass";
    return e;
  }
  std::map<CellKey, std::pair<WeightedMean, WeightedMean>> means;
  for (const auto& c : support.cells) means[c.key];
  for (int i = 0; i < ds.n_units; ++i) {
    const bool target = ds.in_cohort(i, support.g);
    if (!target && !ds.in_source(i)) continue;
    auto it = means.find(cell_key(ds, exposure, i, support.t, support.t0));
    if (it == means.end()) continue;
    const double delta = ds.y(i, support.t) - ds.y(i, support.t0);
    (target ? it->second.first : it->second.second).add(ds.weight[i], delta);
  }
  double value = 0.0;
  for (const auto& c : support.cells) {
    const auto& [tgt, src] = means.at(c.key);
    value += (c.w_target / support.w_target) * (tgt.mean() - src.mean());
  }
  e.value = value;
  e.admissible = true;
  return e;
}

double estimate_dse_regression(const PanelDataset& ds, const ExposurePath& exposure,
                               const RetainedSupport& support) {
  std::map<CellKey, int> index;
  for (const auto& c : support.cells) {
    const int k = static_cast<int>(index.size());
    index[c.key] = k;
  }
  const int k_cells = static_cast<int>(index.size());
  if (k_cells == 0) throw validation_error("DSE regression: empty retained support");
  std::vector<int> rows;
  for (int i = 0; i < ds.n_units; ++i) {
    if (!ds.in_cohort(i, support.g) && !ds.in_source(i)) continue;
    if (index.count(cell_key(ds, exposure, i, support.t, support.t0))) rows.push_back(i);
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, 2 * k_cells);
  Eigen::VectorXd y(n), w(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const int i = rows[r];
    const int z = index.at(cell_key(ds, exposure, i, support.t, support.t0));
    x(r, z) = 1.0;
    if (ds.in_cohort(i, support.g)) x(r, k_cells + z) = 1.0;
    y(r) = ds.y(i, support.t) - ds.y(i, support.t0);
    w(r) = ds.weight[i];
  }
  const Eigen::VectorXd sw = w.cwiseSqrt();
  const Eigen::VectorXd beta =
      (sw.asDiagonal() * x).colPivHouseholderQr().solve(sw.cwiseProduct(y));
  double value = 0.0;
  for (const auto& c : support.cells) {
    value += (c.w_target / support.w_target) * beta(k_cells + index.at(c.key));
  }
  return value;
}

bool cse_admissible(const FirstStageFit& fit, const PanelDataset& ds,
                    const ExposurePath& exposure, int g, Period t, std::string* reason) {
  bool any = false;
  for (int i = 0; i < ds.n_units; ++i) {
    if (!ds.in_cohort(i, g)) continue;
    any = true;
    const int h = exposure.at(i, t);
    if (!fit.covers(t, ds.stratum[i], h)) {
      if (reason) {
        *reason = "source cell (t=" + std::to_string(t) + ", stratum " +
                  std::to_string(ds.stratum[i]) + ", state " + exposure.label(h) +
                  ") below minimum count";
      }
      return false;
    }
  }
  if (!any && reason) *reason = "empty cohort";
  return any;
}

ComponentEstimate estimate_cse(const FirstStageFit& fit, const PanelDataset& ds,
                               const ExposurePath& exposure, int g, int l) {
  if (g == kNeverTreated) throw validation_error("CSE: cohort must not be never-treated");
  const Period t = g + l;
  if (l < -1 || t < 1 || t > ds.n_periods) {
    throw validation_error("CSE: period g+l=" + std::to_string(t) + " out of range");
  }
  ComponentEstimate e = base_estimate(Component::kCSE, g, l, t);
  const CohortMass mass = cohort_mass(ds, g);
  if (mass.n == 0) throw validation_error("cohort " + std::to_string(g) + " is empty");
  e.n_target = mass.n;
  e.w_target = mass.w;
  if (!cse_admissible(fit, ds, exposure, g, t, &e.note)) return e;
  double sum = 0.0;
  for (int i = 0; i < ds.n_units; ++i) {
    if (ds.in_cohort(i, g)) sum += ds.weight[i] * fit.contrast(ds, i, t, exposure.at(i, t));
  }
  e.value = sum / mass.w;
  e.target_mass_retained = 1.0;
  e.admissible = true;
  return e;
}

ComponentEstimate estimate_cse_never_treated(const FirstStageFit& fit,
                                             const PanelDataset& ds,
                                             const ExposurePath& exposure, Period t) {
  if (t < 1 || t > ds.n_periods) {
    throw validation_error("never-treated CSE: period out of range");
  }
  ComponentEstimate e = base_estimate(Component::kCSENeverTreated, kNeverTreated, 0, t);
  const CohortMass mass = source_mass(ds);
  if (mass.n == 0) throw validation_error("never-treated pool is empty");
  e.n_target = mass.n;
  e.w_target = mass.w;
  double sum = 0.0;
  for (int i = 0; i < ds.n_units; ++i) {
    if (!ds.in_source(i)) continue;
    const int h = exposure.at(i, t);
    if (!fit.covers(t, ds.stratum[i], h)) {
      e.note = "never-treated source support not fully retained";
      return e;
    }
    sum += ds.weight[i] * fit.contrast(ds, i, t, h);
  }
  e.value = sum / mass.w;
  e.target_mass_retained = 1.0;
  e.admissible = true;
  return e;
}

ComponentEstimate cse_never_treated_change(const FirstStageFit& fit,
                                           const PanelDataset& ds,
                                           const ExposurePath& exposure, int g) {
  const Period t0 = baseline_period(g, ds.anticipation);
  if (g > ds.n_periods) throw validation_error("never-treated change: g exceeds T");
  const ComponentEstimate at_g = estimate_cse_never_treated(fit, ds, exposure, g);
  const ComponentEstimate at_t0 = estimate_cse_never_treated(fit, ds, exposure, t0);
  ComponentEstimate e = base_estimate(Component::kDeltaCSENeverTreated, g, 0, g);
  e.n_target = at_g.n_target;
  e.w_target = at_g.w_target;
  if (!at_g.admissible || !at_t0.admissible) {
    e.note = "endpoint not reported";
    return e;
  }
  e.value = at_g.value - at_t0.value;
  e.target_mass_retained = 1.0;
  e.admissible = true;
  return e;
}

ComponentEstimate estimate_dte(const ComponentEstimate& dse, const ComponentEstimate& cse) {
  if (dse.g != cse.g || dse.l != cse.l) {
    throw validation_error("DTE: DSE and CSE refer to different (g, l)");
  }
  ComponentEstimate e = base_estimate(Component::kDTE, dse.g, dse.l, dse.t);
  e.n_target = dse.n_target;
  e.w_target = dse.w_target;
  e.target_mass_retained = dse.target_mass_retained;
  if (!dse.admissible || !cse.admissible) {
    e.note = !dse.admissible ? "DSE not reported" : "CSE not reported";
    return e;
  }
  e.value = dse.value + cse.value;
  e.admissible = true;
  return e;
}

ComponentEstimate estimate_local_pde(const PanelDataset& ds, const ExposurePath& exposure,
                                     int g, int l, int min_cell) {
  const auto [t, t0] = contrast_periods(ds, g, l);
  require_groups(ds, g);
  ComponentEstimate e = base_estimate(Component::kLocalPDE, g, l, t);
  WeightedMean target, source;
  const CohortMass mass = cohort_mass(ds, g);
  for (int i = 0; i < ds.n_units; ++i) {
    const bool in_target = ds.in_cohort(i, g);
    if (!in_target && !ds.in_source(i)) continue;
    if (exposure.at(i, t) != 0 || exposure.at(i, t0) != 0) continue;
    (in_target ? target : source).add(ds.weight[i], ds.y(i, t) - ds.y(i, t0));
  }
  e.n_target = target.n;
  e.w_target = target.w;
  e.target_mass_retained = mass.w > 0.0 ? target.w / mass.w : 0.0;
  if (target.n < min_cell || source.n < min_cell) {
    e.note = "isolated zero-exposure support below minimum count";
    return e;
  }
  e.value = target.mean() - source.mean();
  e.admissible = true;
  return e;
}

ComponentEstimate did_benchmark(const PanelDataset& ds, int g, int l) {
  const auto [t, t0] = contrast_periods(ds, g, l);
  require_groups(ds, g);
  ComponentEstimate e = base_estimate(Component::kDIDBenchmark, g, l, t);
  WeightedMean target, source;
  for (int i = 0; i < ds.n_units; ++i) {
    const double delta = ds.y(i, t) - ds.y(i, t0);
    if (ds.in_cohort(i, g)) target.add(ds.weight[i], delta);
    else if (ds.in_source(i)) source.add(ds.weight[i], delta);
  }
  e.n_target = target.n;
  e.w_target = target.w;
  e.target_mass_retained = 1.0;
  e.value = target.mean() - source.mean();
  e.admissible = true;
  return e;
}

ComponentEstimate cs_att_benchmark(const PanelDataset& ds, int g, int l) {
  ComponentEstimate e = did_benchmark(ds, g, l);
  e.component = Component::kCSBenchmark;
  return e;
}

AdmissibleSet admissible_cohorts(const std::vector<ComponentEstimate>& estimates, int l) {
  std::map<int, double> dse_ok;
  std::set<int> cse_ok;
  for (const auto& e : estimates) {
    if (e.l != l || !e.admissible) continue;
    if (e.component == Component::kDSE) dse_ok[e.g] = e.w_target;
    if (e.component == Component::kCSE) cse_ok.insert(e.g);
  }
  AdmissibleSet set;
  double total = 0.0;
  for (const auto& [g, w] : dse_ok) {
    if (!cse_ok.count(g)) continue;
    set.cohorts.push_back(g);
    set.weights.push_back(w);
    total += w;
  }
  for (double& w : set.weights) w /= total;
  return set;
}

std::vector<EventTimeEstimate> aggregate_event_time(
    const std::vector<ComponentEstimate>& estimates, int l) {
  const AdmissibleSet set = admissible_cohorts(estimates, l);
  std::vector<EventTimeEstimate> out;
  for (Component c : {Component::kDSE, Component::kCSE, Component::kDTE,
                      Component::kDIDBenchmark, Component::kCSBenchmark}) {
    std::map<int, const ComponentEstimate*> by_cohort;
    for (const auto& e : estimates) {
      if (e.component == c && e.l == l) by_cohort[e.g] = &e;
    }
    if (by_cohort.empty()) continue;
    EventTimeEstimate agg;
    agg.component = c;
    agg.l = l;
    agg.cohorts = set.cohorts;
    agg.weights = set.weights;
    if (set.cohorts.empty()) {
      agg.note = "empty admissible cohort set";
      out.push_back(std::move(agg));
      continue;
    }
    double value = 0.0;
    bool complete = true;
    for (std::size_t k = 0; k < set.cohorts.size(); ++k) {
      auto it = by_cohort.find(set.cohorts[k]);
      if (it == by_cohort.end() || !it->second->admissible) {
        complete = false;
        break;
      }
      value += set.weights[k] * it->second->value;
    }
    if (complete) {
      agg.value = value;
      agg.admissible = true;
    } else {
      agg.note = "component missing for an admissible cohort";
    }
    out.push_back(std::move(agg));
  }
  return out;
}

}  // namespace spilldid
