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
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "exposure.hpp"
#include "temp_dir.hpp"
#include "panel.hpp"

namespace spilldid::testing {

// Balanced panel with one stratum, unit weights unless given, no basis.
inline PanelDataset make_panel(const std::vector<int>& cohorts, const Eigen::MatrixXd& y,
                               std::vector<double> weights = {}) {
  PanelDataset ds;
  ds.n_units = static_cast<int>(cohorts.size());
  ds.n_periods = static_cast<int>(y.cols());
  for (int i = 0; i < ds.n_units; ++i) ds.unit_ids.push_back(std::to_string(i + 1));
  for (int t = 1; t <= ds.n_periods; ++t) ds.period_labels.push_back(std::to_string(t));
  ds.outcome = y;
  ds.cohort = cohorts;
  ds.weight = weights.empty() ? std::vector<double>(ds.n_units, 1.0) : weights;
  ds.stratum.assign(ds.n_units, 0);
  ds.stratum_labels = {"all"};
  ds.basis = Eigen::MatrixXd(ds.n_units, 0);
  ds.exposure_only.assign(ds.n_units, false);
  return ds;
}

// Exposure path over the states 0 | low | high with doses 0, 1, 2.
inline ExposurePath make_exposure(const Eigen::MatrixXi& state) {
  ExposurePath e;
  e.state = state;
  e.raw = state.cast<double>() / 2.0;
  e.labels = {"0", "low", "high"};
  e.doses = {0.0, 1.0, 2.0};
  return e;
}

// Outcome paths whose long differences Y_t - Y_t0 equal delta.
inline Eigen::MatrixXd outcomes_with_difference(const std::vector<double>& delta, int n_periods,
                                                Period t, Period t0) {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<int>(delta.size()), n_periods);
  for (int i = 0; i < static_cast<int>(delta.size()); ++i) y(i, t - 1) = y(i, t0 - 1) + delta[i];
  return y;
}

}  // namespace spilldid::testing
