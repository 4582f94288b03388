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
#include "panel.hpp"

namespace spilldid {

// Unit membership for one long-difference contrast: a source-trend cell per
// comparison unit and a cell per target unit, -1 when the unit is outside.
// DSE uses the retained cells; the DID benchmark and the local PDE use a
// single cell.
struct ContrastSpec {
  int g = 0;
  int l = 0;
  Period t = 0;
  Period t0 = 0;
  int n_cells = 0;
  std::vector<int> source_cell;
  std::vector<int> target_cell;
};

ContrastSpec dse_contrast(const PanelDataset& ds, const ExposurePath& exposure,
                          const RetainedSupport& support);
ContrastSpec did_contrast(const PanelDataset& ds, int g, int l);
ContrastSpec local_pde_contrast(const PanelDataset& ds, const ExposurePath& exposure,
                                int g, int l);

// Plug-in spillover target: cohort g at event time l, or the never-treated
// pool at calendar period t when g is kNeverTreated.
struct SpilloverSpec {
  int g = kNeverTreated;
  int l = 0;
  Period t = 0;
};

struct StackInput {
  std::vector<ContrastSpec> contrasts;  // each adds a source block and a target
  std::vector<double> contrast_values;  // closed-form target estimates
  const FirstStageFit* fit = nullptr;   // required when spillovers is nonempty
  std::vector<SpilloverSpec> spillovers;
  std::vector<double> spillover_values;
  std::vector<int> share_cohorts;
};

enum class BlockKind { kSourceMeans, kFirstStage, kContrast, kSpillover, kNeverSpillover, kShare };

struct ParameterBlock {
  BlockKind kind;
  int offset;
  int size;
};

// Stacked per-unit estimating equations. Parameter order: source-trend
// cells, first-stage coefficients, contrast targets, cohort spillover
// targets, never-treated spillover targets, cohort shares.
class StackedSystem {
 public:
  StackedSystem(const PanelDataset& ds, const ExposurePath& exposure, StackInput input);

  int n_units() const { return n_units_; }
  int n_params() const { return static_cast<int>(theta_.size()); }
  const Eigen::VectorXd& theta() const { return theta_; }
  const std::vector<ParameterBlock>& blocks() const { return blocks_; }

  // Rows q_i(theta), n_units x n_params.
  Eigen::MatrixXd moments(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd mean_moments(const Eigen::VectorXd& theta) const;
  // (1/N) sum_i dq_i/dtheta, assembled block by block.
  Eigen::MatrixXd jacobian() const;
  Eigen::MatrixXd numeric_jacobian(double step = 1e-4) const;

  // Parameter indices, -1 when absent.
  int contrast_index(std::size_t k) const;
  int spillover_index(std::size_t k) const;
  int share_index(int g) const;

  // Influence rows -grad' (R'R)^{-1} R' q_i for each gradient column,
  // n_units x gradients.cols(). Throws kInference on a singular system.
  Eigen::MatrixXd influence(const Eigen::MatrixXd& gradients) const;

 private:
  struct SaturatedCell {
    SourceCellKey key;
    std::vector<int> units;
  };
  struct Spillover {
    SpilloverSpec spec;
    std::vector<int> units;
    std::vector<Eigen::VectorXd> grad;  // dc/deta per member
  };

  int n_units_ = 0;
  std::vector<double> weight_;
  std::vector<int> share_g_;
  std::vector<int> cohort_;
  StackInput input_;
  std::vector<Eigen::VectorXd> delta_;  // per contrast, per unit
  FirstStageKind fs_kind_ = FirstStageKind::kSaturated;
  std::vector<SaturatedCell> sat_cells_;
  Eigen::MatrixXd sat_r_;  // n_units x cells, R_it of the cell period
  std::vector<int> fs_units_;
  std::vector<Eigen::MatrixXd> fs_xx_;  // structured Gram per source unit
  std::vector<Eigen::VectorXd> fs_xy_;
  std::vector<Spillover> spill_;
  std::vector<ParameterBlock> blocks_;
  std::vector<int> src_offset_;  // per contrast
  Eigen::VectorXd theta_;
  int eta_offset_ = 0;
  int eta_size_ = 0;
  int target_offset_ = 0;
  int spill_offset_ = 0;
  int share_offset_ = 0;
};

// Gradient of the share-weighted average sum_g s_g tau_g / sum_g s_g over
// the given target indices and matching share indices.
Eigen::VectorXd aggregation_gradient(const StackedSystem& sys,
                                     const std::vector<int>& target_index,
                                     const std::vector<int>& share_index);

enum class KernelKind { kBartlett, kUniform, kTabulated };

struct ShacConfig {
  KernelKind kernel = KernelKind::kBartlett;
  double bandwidth = 1.0;
  // Tabulated kernel: (u, K(u)) knots with u ascending, linearly interpolated.
  std::vector<std::pair<double, double>> table;

  double weight(double u) const;
  void validate() const;
};

KernelKind parse_kernel(const std::string& name);
std::string kernel_name(KernelKind k);

// Pairwise distance rho(i, j) from line positions, coordinates, or a matrix.
class DistanceSource {
 public:
  static DistanceSource line(std::vector<double> positions);
  static DistanceSource coordinates(Eigen::MatrixXd xy);
  static DistanceSource matrix(Eigen::MatrixXd d);
  // Picks the matrix, then line positions, then hop counts of the network.
  static DistanceSource from_network(const NetworkSpec& net);

  int size() const;
  double operator()(int i, int j) const;
  // Units j with rho(i, j) <= radius, ascending.
  std::vector<int> within(int i, double radius) const;

 private:
  enum class Kind { kLine, kCoordinates, kMatrix } kind_ = Kind::kMatrix;
  std::vector<double> pos_;
  std::vector<int> order_;  // units sorted by line position
  Eigen::MatrixXd data_;
};

// Gamma = (1/N) sum_i sum_j K(rho(i,j)/b) phi_i phi_j', symmetric by
// construction.
Eigen::MatrixXd shac_covariance(const Eigen::MatrixXd& rows, const DistanceSource& dist,
                                const ShacConfig& cfg, int threads = 1);

// Self-pair sandwich (1/N) sum_i phi_i phi_i'.
Eigen::MatrixXd self_pair_covariance(const Eigen::MatrixXd& rows);

double normal_quantile(double p);

Interval pointwise_ci(double value, double gamma, int n_units, double alpha);

struct BandResult {
  double multiplier = 0.0;
  bool projected = false;  // negative eigenvalues were set to zero
  std::vector<Interval> intervals;
};

BandResult simultaneous_band(const std::vector<double>& values, const Eigen::MatrixXd& cov,
                             int n_units, double alpha, int n_draws, std::uint64_t seed);

}  // namespace spilldid
