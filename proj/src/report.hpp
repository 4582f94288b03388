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

#include <string>
#include <vector>

#include "exposure.hpp"
#include "panel.hpp"
#include "pipeline.hpp"
#include "simulate.hpp"

namespace spilldid {

// One record per (component, g, l) cell and per (component, l) aggregate.
void write_estimates_csv(const EstimationResult& result, const std::string& path);

// One row per DSE support cell, retained or dropped.
void write_support_csv(const EstimationResult& result, const PanelDataset& ds,
                       const ExposurePath& exposure, const std::string& path);

// Benchmarks next to the proposal's DTE on the same cells, with the gap.
void write_benchmark_csv(const EstimationResult& result, const std::string& path);

void write_exposure_csv(const PanelDataset& ds, const ExposurePath& exposure,
                        const std::string& path);

// Edge list (i, j, weight) over nonzero weights, using panel unit ids.
void write_network_csv(const PanelDataset& ds, const NetworkSpec& net, const std::string& path);

void write_mc_csv(const std::vector<McReport>& reports, const std::string& path);
void write_mc_records_csv(const McReport& report, const std::string& path);

// Text tables in the benchmark-deviation and component-performance layouts:
// rows DGP x method, columns N x {Bias, RMSE, Coverage}.
std::string format_mc_tables(const std::vector<McReport>& reports);

}  // namespace spilldid
