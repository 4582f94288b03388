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
#include <utility>
#include <vector>

#include "panel.hpp"

namespace spilldid {

// Interaction network over the panel's units, in panel unit order.
struct NetworkSpec {
  Eigen::MatrixXd weights;  // w[i][j], zero diagonal
  // Pairwise distances when the network came from a distance matrix.
  std::optional<Eigen::MatrixXd> distances;
  // Line coordinates when the network is an open line.
  std::optional<std::vector<double>> positions;

  int size() const { return static_cast<int>(weights.rows()); }
};

enum class DistanceRule { kWeights, kCutoff };

struct NetworkOptions {
  DistanceRule rule = DistanceRule::kCutoff;
  double cutoff = 0.0;
  bool row_normalize = false;
};

NetworkSpec network_from_weights(Eigen::MatrixXd weights, bool row_normalize = false);

// Neighbor indicator 1{0 < d[i][j] <= cutoff}, optionally row-normalized.
NetworkSpec network_from_distances(const Eigen::MatrixXd& distances, double cutoff,
                                   bool row_normalize = false);

// Units on positions 1..n; neighbors within radius steps. Row-normalized by
// default, so interior units give 1/2 to each neighbor and endpoints give 1.
NetworkSpec line_network(int n, bool row_normalize = true, int radius = 1);

// Reads either an edge list (columns i, j[, weight]) or a dense distance
// matrix whose header row lists unit ids. Unit ids are matched against the
// panel's ids.
NetworkSpec load_network(const std::string& path,
                         const std::vector<std::string>& unit_ids,
                         const NetworkOptions& options = {});

// Shortest-path hop counts over the undirected support of w.
Eigen::MatrixXd hop_distances(const NetworkSpec& net);

struct ExposureBin {
  double upper;  // bin is (previous upper, upper]
  std::string label;
  double dose;
};

// Temporal kernel, coarsening map and dose scores. State index 0 is always
// the zero-exposure label.
struct ExposureConfig {
  std::vector<double> kernel{1.0};  // psi by event-time lag; last entry repeats
  std::vector<ExposureBin> bins;
  std::string zero_label = "0";

  // 0 | low (0, 0.5] | high (0.5, 1] with doses 0, 1, 2.
  static ExposureConfig three_state();
  // 0 | positive (0, inf).
  static ExposureConfig binary();

  void validate() const;
  double psi(int lag) const;
  int n_states() const { return static_cast<int>(bins.size()) + 1; }
  std::vector<std::string> labels() const;
  int state_of(double raw) const;
};

struct ExposurePath {
  Eigen::MatrixXd raw;    // n_units x T
  Eigen::MatrixXi state;  // n_units x T, index into labels
  std::vector<std::string> labels;
  std::vector<double> doses;

  int at(int unit, Period t) const { return state(unit, t - 1); }
  int n_states() const { return static_cast<int>(labels.size()); }
  const std::string& label(int s) const { return labels.at(s); }
};

Eigen::MatrixXd raw_exposure(const PanelDataset& ds, const NetworkSpec& net,
                             const ExposureConfig& cfg);

Eigen::MatrixXi coarsen(const Eigen::MatrixXd& raw, const ExposureConfig& cfg);

ExposurePath build_exposure(const PanelDataset& ds, const NetworkSpec& net,
                            const ExposureConfig& cfg);

// Per-unit (state at g+l, state at t0(g)).
std::vector<std::pair<int, int>> two_date_state(const ExposurePath& exposure,
                                                int n_periods, int cohort,
                                                int event_time, int anticipation);

double dose(const std::string& label, const ExposureConfig& cfg);

}  // namespace spilldid
