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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "exposure.hpp"
#include "panel.hpp"
#include "pipeline.hpp"

namespace spilldid {

enum class Design { kDgp1, kDgp2, kDgp3 };
enum class Assignment { kIidEqual, kBlock12 };

Design parse_design(const std::string& name);
std::string design_name(Design d);
Assignment parse_assignment(const std::string& name);
std::string assignment_name(Assignment a);

struct DgpConfig {
  Design design = Design::kDgp1;
  int n_units = 200;
  int n_periods = 6;
  std::vector<int> cohorts{3, 4, 5};
  double kappa = 0.0;
  Assignment assignment = Assignment::kIidEqual;
  std::uint64_t seed = 1;
  int min_cell = 5;
  int event_max = 2;
  int line_radius = 1;
  double noise_scale = 1.0;  // multiplies every epsilon draw

  // Defaults for a design: kappa 0 or 0.4 and the design's assignment rule.
  static DgpConfig make(Design design, int n_units, std::uint64_t seed);
  void validate() const;
};

// Schedules lambda_t, rho_t, tau_l evaluated for t = 1..T and l = 0..T.
double dgp_lambda(Period t);
double dgp_rho(Period t);
double dgp_tau(int l);

struct PotentialOutcomes {
  Eigen::VectorXd alpha;
  Eigen::VectorXd x;
  Eigen::MatrixXd eps;        // n x T
  Eigen::MatrixXd never_h;    // Y(inf, H_it)
  Eigen::MatrixXd never_0;    // Y(inf, 0)
  Eigen::MatrixXd own_h;      // Y(G_i, H_it); equals never_h before adoption
  Eigen::MatrixXd own_0;      // Y(G_i, 0)
};

struct DgpDraw {
  PanelDataset panel;
  NetworkSpec network;
  ExposurePath exposure;
  PotentialOutcomes po;
};

DgpDraw generate_dgp(const DgpConfig& cfg, int replication);

// Cohort assignment alone, in line order. Never-treated is kNeverTreated.
std::vector<int> assign_cohorts(const DgpConfig& cfg, std::uint64_t seed, int replication);

struct CellTruth {
  double dse = 0.0;
  double cse = 0.0;
  double dte = 0.0;
};

// Finite-population (g, l) contrasts over the realized cohort.
CellTruth finite_population_truth(const PanelDataset& ds, const PotentialOutcomes& po,
                                  int g, int l);

// Weighted retained-support truth for an admissible set.
CellTruth event_time_truth(const PanelDataset& ds, const PotentialOutcomes& po,
                           const std::vector<int>& cohorts,
                           const std::vector<double>& weights, int l);

double verify_unit_taxonomy(const PanelDataset& ds, const PotentialOutcomes& po);
double verify_did_decomposition(const PanelDataset& ds, const PotentialOutcomes& po, int g);

enum class McEstimator { kDSE, kCSE, kDTE, kDID, kCS };
std::string mc_estimator_name(McEstimator e);

struct ReplicationRecord {
  int replication = 0;
  int l = 0;
  McEstimator estimator = McEstimator::kDSE;
  bool available = false;
  double value = 0.0;
  double truth = 0.0;      // own retained-support target (DTE for benchmarks)
  double truth_dse = 0.0;  // DSE retained-support target
  bool has_ci = false;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

struct McRow {
  std::string method;  // e.g. "Proposed DSE", "Standard DID"
  std::string target;  // DSE | CSE | DTE
  double bias = 0.0;
  double rmse = 0.0;
  double coverage = 0.0;
  double availability = 0.0;
  int n_available = 0;
  int n_with_ci = 0;
  int n_records = 0;
};

struct McReport {
  DgpConfig config;
  int replications = 0;
  int failures = 0;
  std::vector<std::string> failure_notes;
  std::vector<McRow> rows;
  std::vector<ReplicationRecord> records;

  const McRow* row(const std::string& method, const std::string& target) const;
};

struct McOptions {
  int replications = 1000;
  int threads = 1;
  double alpha = 0.05;
  KernelKind kernel = KernelKind::kBartlett;
  std::optional<double> bandwidth;
  FirstStageKind first_stage = FirstStageKind::kDose;
  bool keep_records = true;
};

// Estimation options used for one Monte Carlo replication.
EstimationOptions mc_estimation_options(const DgpConfig& cfg, const McOptions& options);

// Records for one replication; throws if estimation fails.
std::vector<ReplicationRecord> run_replication(const DgpConfig& cfg, const McOptions& options,
                                               int replication);

McReport run_monte_carlo(const DgpConfig& cfg, const McOptions& options);

// Pooled bias, RMSE, coverage and availability from replication records.
std::vector<McRow> summarize(const std::vector<ReplicationRecord>& records, int replications,
                             int n_event_times);

}  // namespace spilldid
