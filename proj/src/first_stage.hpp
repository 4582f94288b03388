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
#include <compare>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "exposure.hpp"
#include "panel.hpp"

namespace spilldid {

enum class FirstStageKind { kSaturated, kStructured, kDose };

// Never-treated source cell (calendar period, stratum, exposure state).
struct SourceCellKey {
  Period t;
  int stratum;
  int state;
  auto operator<=>(const SourceCellKey&) const = default;
};

struct SourceCell {
  int n = 0;
  double weight = 0.0;
  // Weighted mean of Y_t - Y_1 over the cell.
  double mean = 0.0;
};

// Natural cubic spline in calendar time without the intercept column.
class NaturalSpline {
 public:
  NaturalSpline() = default;
  // Knots at the boundary of [lo, hi] and at df-1 equally spaced quantiles
  // of the observed periods.
  NaturalSpline(const std::vector<double>& x, int df);

  int df() const { return df_; }
  const std::vector<double>& knots() const { return knots_; }
  Eigen::VectorXd evaluate(double x) const;

 private:
  double d(int k, double x) const;
  int df_ = 0;
  std::vector<double> knots_;
};

// Binary-positive exposure-response model fitted by weighted least squares
// on never-treated unit-periods:
//   R_it = a_t(V_i; alpha) + P_it * B_t(V_i)' beta,
// a_t = intercept + V main effects + spline(t), B_t = period indicators and V.
struct StructuredModel {
  std::vector<std::string> columns;  // candidate design columns, input order
  std::vector<int> kept;             // indices into columns
  std::vector<std::string> aliased;  // dropped for collinearity
  Eigen::VectorXd coef;              // over kept columns
  int n_periods = 0;
  int n_basis = 0;
  int first_exposure_column = 0;  // first candidate column of the B_t block
  NaturalSpline spline;

  // Full candidate design row.
  Eigen::VectorXd candidate_row(const Eigen::Ref<const Eigen::RowVectorXd>& v,
                                Period t, bool exposed) const;
  // Design row restricted to kept columns.
  Eigen::VectorXd design_row(const Eigen::Ref<const Eigen::RowVectorXd>& v,
                             Period t, bool exposed) const;
  // Derivative of c_t(v, h) with respect to the kept coefficients.
  Eigen::VectorXd contrast_gradient(const Eigen::Ref<const Eigen::RowVectorXd>& v,
                                    Period t, bool exposed) const;
};

// Period- and stratum-specific line in the dose score, fitted by weighted
// least squares on never-treated rows t = 2..T:
//   R_it = a_t(x) + b_t(x) q(H_it),   so c_t(x, h) = b_t(x) q(h).
// Blocks without dose variation among source units are not estimated.
struct DoseModel {
  int n_periods = 0;
  int n_strata = 1;
  std::vector<double> doses;                 // q per state index
  std::map<std::pair<Period, int>, int> block;  // (t, x) -> index of a; b follows
  Eigen::VectorXd coef;

  // Regressors [1, q(h)] placed at the (t, x) block; zero when the block is
  // not estimated.
  Eigen::VectorXd design_row(Period t, int stratum, int state) const;
  Eigen::VectorXd contrast_gradient(Period t, int stratum, int state) const;
};

// Control-state spillover response learned from the never-treated pool.
// c_t(x, "0") = 0 by construction.
struct FirstStageFit {
  FirstStageKind kind = FirstStageKind::kSaturated;
  int min_cell = 1;
  int n_periods = 0;
  int n_strata = 1;
  int n_states = 1;
  // Source counts for every observed (t, stratum, state), t = 1..T. The
  // means drive the saturated contrast.
  std::map<SourceCellKey, SourceCell> cells;
  std::optional<StructuredModel> structured;
  std::optional<DoseModel> dose;

  int source_count(Period t, int stratum, int state) const;
  // Count rule: n(t, x, h) >= m and n(t, x, 0) >= m.
  bool covers(Period t, int stratum, int state) const;
  // c_t evaluated for unit i at exposure state `state`.
  double contrast(const PanelDataset& ds, int unit, Period t, int state) const;
};

FirstStageFit fit_cse_saturated(const PanelDataset& ds, const ExposurePath& exposure,
                                int min_cell);

FirstStageFit fit_cse_structured(const PanelDataset& ds, const ExposurePath& exposure,
                                 int min_cell, int spline_df);

FirstStageFit fit_cse_dose(const PanelDataset& ds, const ExposurePath& exposure,
                           int min_cell);

FirstStageKind parse_first_stage(const std::string& name);
std::string first_stage_name(FirstStageKind kind);

// Weighted least squares that drops columns aliased with earlier columns.
struct WlsFit {
  std::vector<int> kept;
  std::vector<int> aliased;
  Eigen::VectorXd coef;  // over kept columns
};
WlsFit weighted_least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& w, double tol = 1e-9);

}  // namespace spilldid
