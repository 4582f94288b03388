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
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "estimators.hpp"
#include "exposure.hpp"
#include "first_stage.hpp"
#include "inference.hpp"
#include "panel.hpp"

namespace spilldid {

struct EstimationOptions {
  int min_cell = 5;
  int event_max = 2;
  FirstStageKind first_stage = FirstStageKind::kSaturated;
  int spline_df = 4;
  bool inference = true;
  double alpha = 0.05;
  KernelKind kernel = KernelKind::kBartlett;
  std::vector<std::pair<double, double>> kernel_table;
  std::optional<double> bandwidth;  // unset: ceil(N^(1/3))
  int band_draws = 2000;            // 0 disables bands
  std::uint64_t seed = 1;
  int threads = 1;
  bool benchmarks = true;
  bool local_pde = true;
  bool diagnostics = true;
  // When false, a singular stacked system leaves intervals unset and adds a
  // warning instead of throwing.
  bool strict_inference = true;

  void validate() const;
};

double default_bandwidth(int n_units);

struct EstimationResult {
  int n_units = 0;
  double bandwidth = 0.0;
  std::vector<ComponentEstimate> cells;
  std::vector<EventTimeEstimate> event_time;
  std::vector<RetainedSupport> supports;
  std::vector<std::string> warnings;
  // Event-time influence rows (N x k) and their SHAC covariance, labelled
  // "<component>:<l>", for the proposal's DSE, CSE and DTE aggregates.
  Eigen::MatrixXd event_rows;
  Eigen::MatrixXd event_cov;
  std::vector<std::string> event_labels;

  const ComponentEstimate* find(Component c, int g, int l) const;
  const EventTimeEstimate* find_event(Component c, int l) const;
};

// Point estimates, admissibility, aggregation and, when enabled, SHAC
// intervals and bands for every component.
EstimationResult estimate_all(const PanelDataset& ds, const ExposurePath& exposure,
                              const DistanceSource& distance,
                              const EstimationOptions& options);

FirstStageFit fit_first_stage(const PanelDataset& ds, const ExposurePath& exposure,
                              const EstimationOptions& options);

}  // namespace spilldid
