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

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace spilldid {

// Periods are 1-based everywhere in the public surface.
using Period = int;

// Cohort value for units that never adopt within the sample.
inline constexpr int kNeverTreated = 0;

// Column-name map used by load_panel.
struct PanelSchema {
  std::string unit = "unit";
  std::string period = "period";
  std::string outcome = "outcome";
  std::string cohort = "cohort";
  std::string weight = "weight";
  std::string stratum = "stratum";
  std::string exposure_only = "exposure_only";
  // Basis columns; empty means every column named v1, v2, ...
  std::vector<std::string> basis;
};

struct ValidationIssue {
  std::string code;
  std::string unit;
  std::optional<Period> period;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> errors;
  std::vector<ValidationIssue> warnings;

  bool ok() const { return errors.empty(); }
  std::string summary() const;
};

// Balanced unit-by-period panel with staggered adoption cohorts. Immutable
// once validated; safe to share across threads.
struct PanelDataset {
  int n_units = 0;
  int n_periods = 0;
  std::vector<std::string> unit_ids;
  std::vector<std::string> period_labels;
  Eigen::MatrixXd outcome;  // n_units x n_periods, column t-1 holds period t
  std::vector<int> cohort;  // kNeverTreated or a period in 2..T
  std::vector<double> weight;
  std::vector<int> stratum;
  std::vector<std::string> stratum_labels;
  Eigen::MatrixXd basis;  // n_units x k, k may be 0
  std::vector<std::string> basis_names;
  // Contributes to others' exposure but never enters a target cohort or the
  // never-treated comparison pool.
  std::vector<bool> exposure_only;
  int anticipation = 0;

  double y(int unit, Period t) const { return outcome(unit, t - 1); }
  bool never_treated(int unit) const { return cohort[unit] == kNeverTreated; }
  bool treated(int unit, Period t) const {
    return cohort[unit] != kNeverTreated && t >= cohort[unit];
  }
  // Membership in the comparison pool and in target cohort g.
  bool in_source(int unit) const {
    return never_treated(unit) && !exposure_only[unit];
  }
  bool in_cohort(int unit, int g) const {
    return cohort[unit] == g && !exposure_only[unit];
  }
  int n_strata() const { return static_cast<int>(stratum_labels.size()); }
  bool has_basis() const { return basis.cols() > 0; }

  // Distinct adoption cohorts among target-eligible units, ascending.
  std::vector<int> target_cohorts() const;
};

ValidationReport validate(const PanelDataset& ds);

// Throws Error(kValidation) listing every invariant violation.
void require_valid(const PanelDataset& ds);

PanelDataset load_panel(const std::string& path, const PanelSchema& schema = {});

// Writes the canonical long-format CSV. Periods and cohorts are written with
// their original calendar labels so load_panel restores the same indexing.
void save_panel(const PanelDataset& ds, const std::string& path);

// Y[i][t] - Y[i][t0] for every unit.
Eigen::VectorXd long_difference(const PanelDataset& ds, Period t, Period t0);

// t0(g) = g - delta - 1.
Period baseline_period(int cohort, int anticipation);

}  // namespace spilldid
