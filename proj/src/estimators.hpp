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


#pragma once

#include <compare>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "exposure.hpp"
#include "first_stage.hpp"
#include "panel.hpp"

namespace spilldid {

enum class Component {
  kDSE,
  kCSE,
  kDTE,
  kLocalPDE,
  kDIDBenchmark,
  kCSBenchmark,
  kCSENeverTreated,
  kDeltaCSENeverTreated,
};

std::string_view component_name(Component c);

// DSE cell key Z = (stratum, state at g+l, state at t0).
struct CellKey {
  int stratum;
  int state_t;
  int state_t0;
  auto operator<=>(const CellKey&) const = default;
};

struct SupportCell {
  CellKey key;
  int n_target = 0;
  int n_source = 0;
  double w_target = 0.0;
  double w_source = 0.0;
};

struct RetainedSupport {
  int g = 0;
  int l = 0;
  Period t = 0;
  Period t0 = 0;
  int min_cell = 1;
  std::vector<SupportCell> cells;    // both counts >= min_cell
  std::vector<SupportCell> dropped;  // cohort cells failing the count rule
  int n_target = 0;
  double w_target = 0.0;
  double target_mass_retained = 0.0;
  bool all_mass_retained = false;
};

struct Interval {
  double se = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct ComponentEstimate {
  Component component = Component::kDSE;
  int g = kNeverTreated;
  int l = 0;
  Period t = 0;  // calendar period evaluated (g + l, or t for diagnostics)
  double value = std::numeric_limits<double>::quiet_NaN();
  bool admissible = false;
  std::string note;  // reason when not reported
  int n_target = 0;
  double w_target = 0.0;
  double target_mass_retained = 0.0;
  std::optional<RetainedSupport> support;
  std::optional<Interval> ci;
};

struct EventTimeEstimate {
  Component component = Component::kDSE;
  int l = 0;
  double value = std::numeric_limits<double>::quiet_NaN();
  bool admissible = false;
  std::string note;
  std::vector<int> cohorts;     // admissible cohort set
  std::vector<double> weights;  // W_g / sum W, same order as cohorts
  std::optional<Interval> ci;
  std::optional<Interval> band;
};

// Cohort-g weighted mass and count over target-eligible units.
struct CohortMass {
  int n = 0;
  double w = 0.0;
};
CohortMass cohort_mass(const PanelDataset& ds, int g);

RetainedSupport dse_support(const PanelDataset& ds, const ExposurePath& exposure,
                            int g, int l, int min_cell);

// Cell key of unit i for (g, l); t and t0 come from the support.
CellKey cell_key(const PanelDataset& ds, const ExposurePath& exposure, int unit,
                 Period t, Period t0);

ComponentEstimate estimate_dse(const PanelDataset& ds, const ExposurePath& exposure,
                               const RetainedSupport& support);

// Same estimate from the saturated long-difference WLS regression on the
// retained comparison sample.
double estimate_dse_regression(const PanelDataset& ds, const ExposurePath& exposure,
                               const RetainedSupport& support);

// CSE admissibility at calendar period t for cohort g.
bool cse_admissible(const FirstStageFit& fit, const PanelDataset& ds,
                    const ExposurePath& exposure, int g, Period t,
                    std::string* reason = nullptr);

ComponentEstimate estimate_cse(const FirstStageFit& fit, const PanelDataset& ds,
                               const ExposurePath& exposure, int g, int l);

ComponentEstimate estimate_cse_never_treated(const FirstStageFit& fit,
                                             const PanelDataset& ds,
                                             const ExposurePath& exposure, Period t);

ComponentEstimate cse_never_treated_change(const FirstStageFit& fit,
                                           const PanelDataset& ds,
                                           const ExposurePath& exposure, int g);

// Sum of two estimates at the same (g, l). Both endpoints must agree.
ComponentEstimate estimate_dte(const ComponentEstimate& dse, const ComponentEstimate& cse);

ComponentEstimate estimate_local_pde(const PanelDataset& ds, const ExposurePath& exposure,
                                     int g, int l, int min_cell);

// Group-versus-never long-difference contrast that ignores exposure.
ComponentEstimate did_benchmark(const PanelDataset& ds, int g, int l);

// Unconditional group-time ATT with never-treated controls. Same point
// value as did_benchmark; inference differs.
ComponentEstimate cs_att_benchmark(const PanelDataset& ds, int g, int l);

// Cohorts where both DSE and CSE are admissible at l, with W_g weights.
struct AdmissibleSet {
  std::vector<int> cohorts;
  std::vector<double> weights;
};
AdmissibleSet admissible_cohorts(const std::vector<ComponentEstimate>& estimates, int l);

// Aggregates every component in `estimates` at event time l over the
// DSE/CSE admissible cohort set with identical weights.
std::vector<EventTimeEstimate> aggregate_event_time(
    const std::vector<ComponentEstimate>& estimates, int l);

}  // namespace spilldid
