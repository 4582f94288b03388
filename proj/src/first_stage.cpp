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


#include "first_stage.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace spilldid {

namespace {

double quantile7(std::vector<double> x, double p) {
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

double cube_plus(double v) { return v > 0.0 ? v * v * v : 0.0; }

void require_source_pool(const PanelDataset& ds, const ExposurePath& exposure) {
  bool any = false;
  for (int i = 0; i < ds.n_units; ++i) {
    if (!ds.in_source(i)) continue;
    any = true;
    if (exposure.at(i, 1) != 0) {
      throw validation_error("first stage: never-treated unit '" + ds.unit_ids[i] +
                             "' is exposed in period 1; period 1 must be the "
                             "zero-exposure baseline");
    }
  }
  if (!any) throw validation_error("first stage: never-treated pool is empty");
}

std::map<SourceCellKey, SourceCell> source_cells(const PanelDataset& ds,
                                                 const ExposurePath& exposure) {
  std::map<SourceCellKey, SourceCell> cells;
  for (int i = 0; i < ds.n_units; ++i) {
    if (!ds.in_source(i)) continue;
    for (Period t = 1; t <= ds.n_periods; ++t) {
      auto& c = cells[{t, ds.stratum[i], exposure.at(i, t)}];
      const double r = ds.y(i, t) - ds.y(i, 1);
      c.n += 1;
      c.weight += ds.weight[i];
      c.mean += ds.weight[i] * r;
    }
  }
  for (auto& [key, c] : cells) c.mean /= c.weight;
  return cells;
}

}  // namespace

NaturalSpline::NaturalSpline(const std::vector<double>& x, int df) : df_(df) {
  if (df < 1) throw validation_error("spline: degrees of freedom must be >= 1");
  if (x.empty()) throw validation_error("spline: no data");
  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  knots_.push_back(*mn);
  for (int k = 1; k < df; ++k) knots_.push_back(quantile7(x, static_cast<double>(k) / df));
  knots_.push_back(*mx);
}

double NaturalSpline::d(int k, double x) const {
  const double last = knots_.back();
  const double gap = last - knots_[k];
  if (gap <= 0.0) return 0.0;
  return (cube_plus(x - knots_[k]) - cube_plus(x - last)) / gap;
}

Eigen::VectorXd NaturalSpline::evaluate(double x) const {
  // Truncated-power construction: N_2 = x, N_{k+2} = d_k - d_{K-1}.
  Eigen::VectorXd out(df_);
  out(0) = x;
  const int n_knots = static_cast<int>(knots_.size());
  for (int k = 0; k + 2 < n_knots; ++k) out(k + 1) = d(k, x) - d(n_knots - 2, x);
  return out;
}

Eigen::VectorXd StructuredModel::candidate_row(
    const Eigen::Ref<const Eigen::RowVectorXd>& v, Period t, bool exposed) const {
  Eigen::VectorXd row = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(columns.size()));
  int c = 0;
  row(c++) = 1.0;
  for (int k = 0; k < n_basis; ++k) row(c++) = v(k);
  const Eigen::VectorXd s = spline.evaluate(static_cast<double>(t));
  for (Eigen::Index k = 0; k < s.size(); ++k) row(c++) = s(k);
  // Exposure-response block: period indicators for t = 2..T, then V.
  if (exposed) {
    if (t >= 2) row(c + t - 2) = 1.0;
    for (int k = 0; k < n_basis; ++k) row(c + n_periods - 1 + k) = v(k);
  }
  return row;
}

Eigen::VectorXd StructuredModel::design_row(const Eigen::Ref<const Eigen::RowVectorXd>& v,
                                            Period t, bool exposed) const {
  const Eigen::VectorXd full = candidate_row(v, t, exposed);
  Eigen::VectorXd out(static_cast<Eigen::Index>(kept.size()));
  for (std::size_t k = 0; k < kept.size(); ++k) out(k) = full(kept[k]);
  return out;
}

Eigen::VectorXd StructuredModel::contrast_gradient(
    const Eigen::Ref<const Eigen::RowVectorXd>& v, Period t, bool exposed) const {
  Eigen::VectorXd out = design_row(v, t, exposed);
  for (std::size_t k = 0; k < kept.size(); ++k) {
    if (kept[k] < first_exposure_column) out(k) = 0.0;
  }
  return out;
}

int FirstStageFit::source_count(Period t, int stratum, int state) const {
  auto it = cells.find({t, stratum, state});
  return it == cells.end() ? 0 : it->second.n;
}

bool FirstStageFit::covers(Period t, int stratum, int state) const {
  return source_count(t, stratum, state) >= min_cell &&
         source_count(t, stratum, 0) >= min_cell;
}

double FirstStageFit::contrast(const PanelDataset& ds, int unit, Period t,
                               int state) const {
  if (state == 0) return 0.0;
  if (kind == FirstStageKind::kDose) {
    const Eigen::VectorXd g = dose->contrast_gradient(t, ds.stratum[unit], state);
    if (g.cwiseAbs().sum() == 0.0) {
      throw validation_error("first stage: no dose variation among source units in period " +
                             std::to_string(t));
    }
    return g.dot(dose->coef);
  }
  if (kind == FirstStageKind::kStructured) {
    const Eigen::VectorXd g = structured->contrast_gradient(ds.basis.row(unit), t, true);
    return g.dot(structured->coef);
  }
  const int x = ds.stratum[unit];
  auto exposed = cells.find({t, x, state});
  auto zero = cells.find({t, x, 0});
  if (exposed == cells.end() || zero == cells.end()) {
    throw validation_error("first stage: no source cell for period " + std::to_string(t) +
                           ", stratum " + std::to_string(x) + ", state " +
                           std::to_string(state));
  }
  return exposed->second.mean - zero->second.mean;
}

FirstStageFit fit_cse_saturated(const PanelDataset& ds, const ExposurePath& exposure,
                                int min_cell) {
  if (min_cell < 1) throw validation_error("first stage: min_cell must be >= 1");
  require_source_pool(ds, exposure);
  FirstStageFit fit;
  fit.kind = FirstStageKind::kSaturated;
  fit.min_cell = min_cell;
  fit.n_periods = ds.n_periods;
  fit.n_strata = ds.n_strata();
  fit.n_states = exposure.n_states();
  fit.cells = source_cells(ds, exposure);
  return fit;
}

WlsFit weighted_least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& w, double tol) {
  const Eigen::VectorXd sw = w.cwiseSqrt();
  const Eigen::MatrixXd xs = sw.asDiagonal() * x;
  WlsFit fit;
  Eigen::MatrixXd basis(x.rows(), 0);
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    Eigen::VectorXd v = xs.col(k);
    const double norm = v.norm();
    if (norm > 0.0) {
      for (int pass = 0; pass < 2; ++pass) v -= basis * (basis.transpose() * v);
    }
    const double resid = v.norm();
    if (norm == 0.0 || resid <= tol * norm) {
      fit.aliased.push_back(static_cast<int>(k));
      continue;
    }
    basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
    basis.col(basis.cols() - 1) = v / resid;
    fit.kept.push_back(static_cast<int>(k));
  }
  Eigen::MatrixXd xk(x.rows(), static_cast<Eigen::Index>(fit.kept.size()));
  for (std::size_t k = 0; k < fit.kept.size(); ++k) xk.col(k) = xs.col(fit.kept[k]);
  fit.coef = xk.colPivHouseholderQr().solve(sw.cwiseProduct(y));
  return fit;
}

FirstStageFit fit_cse_structured(const PanelDataset& ds, const ExposurePath& exposure,
                                 int min_cell, int spline_df) {
  if (min_cell < 1) throw validation_error("first stage: min_cell must be >= 1");
  if (!ds.has_basis()) {
    throw validation_error("structured first stage requires basis columns (v1..vk)");
  }
  require_source_pool(ds, exposure);
  FirstStageFit fit;
  fit.kind = FirstStageKind::kStructured;
  fit.min_cell = min_cell;
  fit.n_periods = ds.n_periods;
  fit.n_strata = ds.n_strata();
  fit.n_states = exposure.n_states();
  fit.cells = source_cells(ds, exposure);

  StructuredModel model;
  model.n_periods = ds.n_periods;
  model.n_basis = static_cast<int>(ds.basis.cols());
  std::vector<double> periods;
  for (Period t = 1; t <= ds.n_periods; ++t) periods.push_back(t);
  model.spline = NaturalSpline(periods, spline_df);
  model.columns.push_back("intercept");
  for (const auto& b : ds.basis_names) model.columns.push_back(b);
  for (int k = 1; k <= spline_df; ++k) model.columns.push_back("ns(t)" + std::to_string(k));
  model.first_exposure_column = static_cast<int>(model.columns.size());
  for (Period t = 2; t <= ds.n_periods; ++t) model.columns.push_back("P:t" + std::to_string(t));
  for (const auto& b : ds.basis_names) model.columns.push_back("P:" + b);

  std::vector<int> rows_unit;
  for (int i = 0; i < ds.n_units; ++i) {
    if (ds.in_source(i)) rows_unit.push_back(i);
  }
  const auto n_rows = static_cast<Eigen::Index>(rows_unit.size()) * ds.n_periods;
  Eigen::MatrixXd x(n_rows, static_cast<Eigen::Index>(model.columns.size()));
  Eigen::VectorXd r(n_rows), w(n_rows);
  Eigen::Index row = 0;
  for (int i : rows_unit) {
    for (Period t = 1; t <= ds.n_periods; ++t, ++row) {
      x.row(row) = model.candidate_row(ds.basis.row(i), t, exposure.at(i, t) != 0);
      r(row) = ds.y(i, t) - ds.y(i, 1);
      w(row) = ds.weight[i];
    }
  }
  const WlsFit wls = weighted_least_squares(x, r, w);
  model.kept = wls.kept;
  for (int k : wls.aliased) model.aliased.push_back(model.columns[k]);
  model.coef = wls.coef;
  fit.structured = std::move(model);
  return fit;
}

Eigen::VectorXd DoseModel::design_row(Period t, int stratum, int state) const {
  Eigen::VectorXd row = Eigen::VectorXd::Zero(coef.size());
  auto it = block.find({t, stratum});
  if (it == block.end()) return row;
  row(it->second) = 1.0;
  row(it->second + 1) = doses.at(state);
  return row;
}

Eigen::VectorXd DoseModel::contrast_gradient(Period t, int stratum, int state) const {
  Eigen::VectorXd row = Eigen::VectorXd::Zero(coef.size());
  auto it = block.find({t, stratum});
  if (it != block.end()) row(it->second + 1) = doses.at(state);
  return row;
}

FirstStageFit fit_cse_dose(const PanelDataset& ds, const ExposurePath& exposure,
                           int min_cell) {
  if (min_cell < 1) throw validation_error("first stage: min_cell must be >= 1");
  require_source_pool(ds, exposure);
  FirstStageFit fit;
  fit.kind = FirstStageKind::kDose;
  fit.min_cell = min_cell;
  fit.n_periods = ds.n_periods;
  fit.n_strata = ds.n_strata();
  fit.n_states = exposure.n_states();
  fit.cells = source_cells(ds, exposure);

  DoseModel model;
  model.n_periods = ds.n_periods;
  model.n_strata = ds.n_strata();
  model.doses = exposure.doses;
  std::vector<double> coef;
  for (Period t = 2; t <= ds.n_periods; ++t) {
    for (int x = 0; x < ds.n_strata(); ++x) {
      double w = 0.0, sq = 0.0, sr = 0.0;
      for (int i = 0; i < ds.n_units; ++i) {
        if (!ds.in_source(i) || ds.stratum[i] != x) continue;
        w += ds.weight[i];
        sq += ds.weight[i] * model.doses[exposure.at(i, t)];
        sr += ds.weight[i] * (ds.y(i, t) - ds.y(i, 1));
      }
      if (w == 0.0) continue;
      const double qbar = sq / w, rbar = sr / w;
      double sqq = 0.0, sqr = 0.0;
      for (int i = 0; i < ds.n_units; ++i) {
        if (!ds.in_source(i) || ds.stratum[i] != x) continue;
        const double dq = model.doses[exposure.at(i, t)] - qbar;
        sqq += ds.weight[i] * dq * dq;
        sqr += ds.weight[i] * dq * (ds.y(i, t) - ds.y(i, 1) - rbar);
      }
      if (!(sqq > 0.0)) continue;
      const double b = sqr / sqq;
      model.block[{t, x}] = static_cast<int>(coef.size());
      coef.push_back(rbar - b * qbar);
      coef.push_back(b);
    }
  }
  model.coef = Eigen::Map<Eigen::VectorXd>(coef.data(), static_cast<Eigen::Index>(coef.size()));
  fit.dose = std::move(model);
  return fit;
}

FirstStageKind parse_first_stage(const std::string& name) {
  if (name == "saturated") return FirstStageKind::kSaturated;
  if (name == "structured") return FirstStageKind::kStructured;
  if (name == "dose") return FirstStageKind::kDose;
  throw validation_error("unknown first stage '" + name + "' (saturated, structured, dose)");
}

std::string first_stage_name(FirstStageKind kind) {
  switch (kind) {
    case FirstStageKind::kSaturated: return "saturated";
    case FirstStageKind::kStructured: return "structured";
    case FirstStageKind::kDose: return "dose";
  }
  return "?";
}

}  // namespace spilldid
