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


#include "inference.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <map>
#include <random>
#include <thread>

#include "error.hpp"

namespace spilldid {

ContrastSpec dse_contrast(const PanelDataset& ds, const ExposurePath& exposure,
                          const RetainedSupport& support) {
  ContrastSpec c;
  c.g = support.g;
  c.l = support.l;
  c.t = support.t;
  c.t0 = support.t0;
  c.n_cells = static_cast<int>(support.cells.size());
  std::map<CellKey, int> index;
  for (int k = 0; k < c.n_cells; ++k) index[support.cells[k].key] = k;
  c.source_cell.assign(ds.n_units, -1);
  c.target_cell.assign(ds.n_units, -1);
  for (int i = 0; i < ds.n_units; ++i) {
    const bool target = ds.in_cohort(i, c.g);
    if (!target && !ds.in_source(i)) continue;
    auto it = index.find(cell_key(ds, exposure, i, c.t, c.t0));
    if (it == index.end()) continue;
    (target ? c.target_cell : c.source_cell)[i] = it->second;
  }
  return c;
}

ContrastSpec did_contrast(const PanelDataset& ds, int g, int l) {
  ContrastSpec c;
  c.g = g;
  c.l = l;
  c.t = g + l;
  c.t0 = baseline_period(g, ds.anticipation);
  c.n_cells = 1;
  c.source_cell.assign(ds.n_units, -1);
  c.target_cell.assign(ds.n_units, -1);
  for (int i = 0; i < ds.n_units; ++i) {
    if (ds.in_cohort(i, g)) c.target_cell[i] = 0;
    else if (ds.in_source(i)) c.source_cell[i] = 0;
  }
  return c;
}

ContrastSpec local_pde_contrast(const PanelDataset& ds, const ExposurePath& exposure,
                                int g, int l) {
  ContrastSpec c = did_contrast(ds, g, l);
  for (int i = 0; i < ds.n_units; ++i) {
    if (exposure.at(i, c.t) != 0 || exposure.at(i, c.t0) != 0) {
      c.source_cell[i] = -1;
      c.target_cell[i] = -1;
    }
  }
  return c;
}

StackedSystem::StackedSystem(const PanelDataset& ds, const ExposurePath& exposure,
                             StackInput input)
    : n_units_(ds.n_units), weight_(ds.weight), input_(std::move(input)) {
  if (input_.contrast_values.size() != input_.contrasts.size() ||
      input_.spillover_values.size() != input_.spillovers.size()) {
    throw validation_error("stacked system: estimate count does not match specification");
  }
  if (!input_.spillovers.empty() && input_.fit == nullptr) {
    throw validation_error("stacked system: spillover targets need a first-stage fit");
  }
  const double n = n_units_;
  std::vector<double> theta;

  // Source-trend cell means.
  for (const auto& c : input_.contrasts) {
    if (static_cast<int>(c.source_cell.size()) != n_units_ ||
        static_cast<int>(c.target_cell.size()) != n_units_) {
      throw validation_error("stacked system: contrast does not match the panel");
    }
    Eigen::VectorXd delta(n_units_);
    for (int i = 0; i < n_units_; ++i) delta(i) = ds.y(i, c.t) - ds.y(i, c.t0);
    std::vector<double> sum(c.n_cells, 0.0), w(c.n_cells, 0.0);
    for (int i = 0; i < n_units_; ++i) {
      if (c.source_cell[i] < 0) continue;
      sum[c.source_cell[i]] += weight_[i] * delta(i);
      w[c.source_cell[i]] += weight_[i];
    }
    src_offset_.push_back(static_cast<int>(theta.size()));
    for (int k = 0; k < c.n_cells; ++k) {
      if (w[k] <= 0.0) throw validation_error("stacked system: empty source cell");
      theta.push_back(sum[k] / w[k]);
    }
    delta_.push_back(std::move(delta));
  }
  blocks_.push_back({BlockKind::kSourceMeans, 0, static_cast<int>(theta.size())});

  // First stage.
  eta_offset_ = static_cast<int>(theta.size());
  if (input_.fit != nullptr) {
    const FirstStageFit& fit = *input_.fit;
    fs_kind_ = fit.kind;
    std::vector<std::vector<int>> members(input_.spillovers.size());
    for (std::size_t s = 0; s < input_.spillovers.size(); ++s) {
      const auto& sp = input_.spillovers[s];
      for (int i = 0; i < n_units_; ++i) {
        const bool in = sp.g == kNeverTreated ? ds.in_source(i) : ds.in_cohort(i, sp.g);
        if (in) members[s].push_back(i);
      }
    }
    if (fit.kind == FirstStageKind::kSaturated) {
      std::map<SourceCellKey, int> index;
      auto need = [&](const SourceCellKey& key) {
        if (!index.count(key)) {
          index[key] = static_cast<int>(sat_cells_.size());
          sat_cells_.push_back({key, {}});
        }
        return index[key];
      };
      std::vector<std::vector<std::pair<int, int>>> pairs(input_.spillovers.size());
      for (std::size_t s = 0; s < input_.spillovers.size(); ++s) {
        const Period t = input_.spillovers[s].t;
        for (int i : members[s]) {
          const int h = exposure.at(i, t);
          if (h == 0) {
            pairs[s].push_back({-1, -1});
            continue;
          }
          const int x = ds.stratum[i];
          pairs[s].push_back({need({t, x, h}), need({t, x, 0})});
        }
      }
      eta_size_ = static_cast<int>(sat_cells_.size());
      sat_r_ = Eigen::MatrixXd::Zero(n_units_, eta_size_);
      for (int k = 0; k < eta_size_; ++k) {
        auto& cell = sat_cells_[k];
        auto it = fit.cells.find(cell.key);
        if (it == fit.cells.end() || it->second.n == 0) {
          throw validation_error("stacked system: first-stage cell has no source units");
        }
        for (int i = 0; i < n_units_; ++i) {
          if (ds.in_source(i) && ds.stratum[i] == cell.key.stratum &&
              exposure.at(i, cell.key.t) == cell.key.state) {
            cell.units.push_back(i);
            sat_r_(i, k) = ds.y(i, cell.key.t) - ds.y(i, 1);
          }
        }
        theta.push_back(it->second.mean);
      }
      for (std::size_t s = 0; s < input_.spillovers.size(); ++s) {
        Spillover sp{input_.spillovers[s], members[s], {}};
        for (const auto& [hi, lo] : pairs[s]) {
          Eigen::VectorXd grad = Eigen::VectorXd::Zero(eta_size_);
          if (hi >= 0) {
            grad(hi) += 1.0;
            grad(lo) -= 1.0;
          }
          sp.grad.push_back(std::move(grad));
        }
        spill_.push_back(std::move(sp));
      }
    } else {
      // Linear first stages enter through their WLS normal equations.
      const bool structured = fit.kind == FirstStageKind::kStructured;
      const Eigen::VectorXd& coef = structured ? fit.structured->coef : fit.dose->coef;
      auto design = [&](int i, Period t) -> Eigen::VectorXd {
        const int h = exposure.at(i, t);
        if (structured) return fit.structured->design_row(ds.basis.row(i), t, h != 0);
        return fit.dose->design_row(t, ds.stratum[i], h);
      };
      auto gradient = [&](int i, Period t) -> Eigen::VectorXd {
        const int h = exposure.at(i, t);
        if (h == 0) return Eigen::VectorXd::Zero(coef.size());
        if (structured) return fit.structured->contrast_gradient(ds.basis.row(i), t, true);
        return fit.dose->contrast_gradient(t, ds.stratum[i], h);
      };
      eta_size_ = static_cast<int>(coef.size());
      const Period first = structured ? 1 : 2;
      for (int i = 0; i < n_units_; ++i) {
        if (!ds.in_source(i)) continue;
        Eigen::MatrixXd xx = Eigen::MatrixXd::Zero(eta_size_, eta_size_);
        Eigen::VectorXd xy = Eigen::VectorXd::Zero(eta_size_);
        for (Period t = first; t <= ds.n_periods; ++t) {
          const Eigen::VectorXd x = design(i, t);
          xx.noalias() += x * x.transpose();
          xy.noalias() += x * (ds.y(i, t) - ds.y(i, 1));
        }
        fs_units_.push_back(i);
        fs_xx_.push_back(std::move(xx));
        fs_xy_.push_back(std::move(xy));
      }
      for (int k = 0; k < eta_size_; ++k) theta.push_back(coef(k));
      for (std::size_t s = 0; s < input_.spillovers.size(); ++s) {
        Spillover sp{input_.spillovers[s], members[s], {}};
        for (int i : members[s]) sp.grad.push_back(gradient(i, sp.spec.t));
        spill_.push_back(std::move(sp));
      }
    }
  }
  blocks_.push_back({BlockKind::kFirstStage, eta_offset_, eta_size_});

  target_offset_ = static_cast<int>(theta.size());
  for (double v : input_.contrast_values) theta.push_back(v);
  blocks_.push_back({BlockKind::kContrast, target_offset_,
                     static_cast<int>(input_.contrasts.size())});

  spill_offset_ = static_cast<int>(theta.size());
  int n_cohort_spill = 0;
  for (std::size_t s = 0; s < input_.spillovers.size(); ++s) {
    theta.push_back(input_.spillover_values[s]);
    if (input_.spillovers[s].g != kNeverTreated) ++n_cohort_spill;
  }
  blocks_.push_back({BlockKind::kSpillover, spill_offset_, n_cohort_spill});
  blocks_.push_back({BlockKind::kNeverSpillover, spill_offset_ + n_cohort_spill,
                     static_cast<int>(input_.spillovers.size()) - n_cohort_spill});

  share_offset_ = static_cast<int>(theta.size());
  cohort_.assign(n_units_, -1);
  for (int i = 0; i < n_units_; ++i) {
    if (!ds.exposure_only[i] && !ds.never_treated(i)) cohort_[i] = ds.cohort[i];
  }
  for (int g : input_.share_cohorts) {
    const CohortMass mass = cohort_mass(ds, g);
    if (mass.n == 0) throw validation_error("stacked system: empty share cohort");
    theta.push_back(mass.w / n);
  }
  blocks_.push_back({BlockKind::kShare, share_offset_,
                     static_cast<int>(input_.share_cohorts.size())});
  theta_ = Eigen::Map<Eigen::VectorXd>(theta.data(), static_cast<Eigen::Index>(theta.size()));
}

int StackedSystem::contrast_index(std::size_t k) const {
  return k < input_.contrasts.size() ? target_offset_ + static_cast<int>(k) : -1;
}

int StackedSystem::spillover_index(std::size_t k) const {
  return k < input_.spillovers.size() ? spill_offset_ + static_cast<int>(k) : -1;
}

int StackedSystem::share_index(int g) const {
  for (std::size_t k = 0; k < input_.share_cohorts.size(); ++k) {
    if (input_.share_cohorts[k] == g) return share_offset_ + static_cast<int>(k);
  }
  return -1;
}

Eigen::MatrixXd StackedSystem::moments(const Eigen::VectorXd& theta) const {
  if (theta.size() != theta_.size()) throw validation_error("moments: wrong parameter size");
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n_units_, theta.size());
  for (std::size_t k = 0; k < input_.contrasts.size(); ++k) {
    const auto& c = input_.contrasts[k];
    const int off = src_offset_[k];
    const int tgt = target_offset_ + static_cast<int>(k);
    for (int i = 0; i < n_units_; ++i) {
      if (c.source_cell[i] >= 0) {
        const int col = off + c.source_cell[i];
        q(i, col) = weight_[i] * (delta_[k](i) - theta(col));
      }
      if (c.target_cell[i] >= 0) {
        q(i, tgt) = weight_[i] *
                    (delta_[k](i) - theta(off + c.target_cell[i]) - theta(tgt));
      }
    }
  }
  if (fs_kind_ == FirstStageKind::kSaturated) {
    for (int k = 0; k < static_cast<int>(sat_cells_.size()); ++k) {
      const int col = eta_offset_ + k;
      for (int i : sat_cells_[k].units) q(i, col) = weight_[i] * (sat_r_(i, k) - theta(col));
    }
  } else {
    const Eigen::VectorXd eta = theta.segment(eta_offset_, eta_size_);
    for (std::size_t u = 0; u < fs_units_.size(); ++u) {
      const int i = fs_units_[u];
      q.row(i).segment(eta_offset_, eta_size_) =
          (weight_[i] * (fs_xy_[u] - fs_xx_[u] * eta)).transpose();
    }
  }
  const Eigen::VectorXd eta = theta.segment(eta_offset_, eta_size_);
  for (std::size_t s = 0; s < spill_.size(); ++s) {
    const int col = spill_offset_ + static_cast<int>(s);
    const auto& sp = spill_[s];
    for (std::size_t m = 0; m < sp.units.size(); ++m) {
      const int i = sp.units[m];
      q(i, col) = weight_[i] * (sp.grad[m].dot(eta) - theta(col));
    }
  }
  for (std::size_t k = 0; k < input_.share_cohorts.size(); ++k) {
    const int col = share_offset_ + static_cast<int>(k);
    const int g = input_.share_cohorts[k];
    for (int i = 0; i < n_units_; ++i) {
      q(i, col) = (cohort_[i] == g ? weight_[i] : 0.0) - theta(col);
    }
  }
  return q;
}

Eigen::VectorXd StackedSystem::mean_moments(const Eigen::VectorXd& theta) const {
  return moments(theta).colwise().sum().transpose() / static_cast<double>(n_units_);
}

Eigen::MatrixXd StackedSystem::jacobian() const {
  const auto p = theta_.size();
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t k = 0; k < input_.contrasts.size(); ++k) {
    const auto& c = input_.contrasts[k];
    const int off = src_offset_[k];
    const int tgt = target_offset_ + static_cast<int>(k);
    for (int i = 0; i < n_units_; ++i) {
      if (c.source_cell[i] >= 0) {
        const int col = off + c.source_cell[i];
        r(col, col) -= weight_[i];
      }
      if (c.target_cell[i] >= 0) {
        r(tgt, off + c.target_cell[i]) -= weight_[i];
        r(tgt, tgt) -= weight_[i];
      }
    }
  }
  if (fs_kind_ == FirstStageKind::kSaturated) {
    for (int k = 0; k < static_cast<int>(sat_cells_.size()); ++k) {
      const int col = eta_offset_ + k;
      for (int i : sat_cells_[k].units) r(col, col) -= weight_[i];
    }
  } else {
    for (std::size_t u = 0; u < fs_units_.size(); ++u) {
      r.block(eta_offset_, eta_offset_, eta_size_, eta_size_) -=
          weight_[fs_units_[u]] * fs_xx_[u];
    }
  }
  for (std::size_t s = 0; s < spill_.size(); ++s) {
    const int row = spill_offset_ + static_cast<int>(s);
    const auto& sp = spill_[s];
    for (std::size_t m = 0; m < sp.units.size(); ++m) {
      const int i = sp.units[m];
      r.row(row).segment(eta_offset_, eta_size_) += weight_[i] * sp.grad[m].transpose();
      r(row, row) -= weight_[i];
    }
  }
  for (std::size_t k = 0; k < input_.share_cohorts.size(); ++k) {
    const int col = share_offset_ + static_cast<int>(k);
    r(col, col) -= static_cast<double>(n_units_);
  }
  return r / static_cast<double>(n_units_);
}

Eigen::MatrixXd StackedSystem::numeric_jacobian(double step) const {
  const auto p = theta_.size();
  Eigen::MatrixXd r(p, p);
  for (Eigen::Index k = 0; k < p; ++k) {
    Eigen::VectorXd up = theta_, down = theta_;
    up(k) += step;
    down(k) -= step;
    r.col(k) = (mean_moments(up) - mean_moments(down)) / (2.0 * step);
  }
  return r;
}

Eigen::MatrixXd StackedSystem::influence(const Eigen::MatrixXd& gradients) const {
  if (gradients.rows() != theta_.size()) {
    throw validation_error("influence: gradient size does not match the system");
  }
  const Eigen::MatrixXd r = jacobian();
  // With Psi = I and a square Jacobian, (R'R)^{-1} R' = R^{-1}.
  Eigen::FullPivLU<Eigen::MatrixXd> lu(r.transpose());
  lu.setThreshold(1e-10);
  if (!lu.isInvertible()) {
    throw inference_error("stacked Jacobian is singular (rank " + std::to_string(lu.rank()) +
                          " of " + std::to_string(r.rows()) + ")");
  }
  const Eigen::MatrixXd v = lu.solve(gradients);
  return -(moments(theta_) * v);
}

Eigen::VectorXd aggregation_gradient(const StackedSystem& sys,
                                     const std::vector<int>& target_index,
                                     const std::vector<int>& share_index) {
  if (target_index.size() != share_index.size() || target_index.empty()) {
    throw validation_error("aggregation gradient: mismatched or empty index sets");
  }
  const Eigen::VectorXd& theta = sys.theta();
  double total = 0.0, agg = 0.0;
  for (std::size_t k = 0; k < target_index.size(); ++k) {
    total += theta(share_index[k]);
    agg += theta(share_index[k]) * theta(target_index[k]);
  }
  agg /= total;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(sys.n_params());
  for (std::size_t k = 0; k < target_index.size(); ++k) {
    grad(target_index[k]) += theta(share_index[k]) / total;
    grad(share_index[k]) += (theta(target_index[k]) - agg) / total;
  }
  return grad;
}

double ShacConfig::weight(double u) const {
  if (u < 0.0 || u > 1.0) return 0.0;
  switch (kernel) {
    case KernelKind::kBartlett: return 1.0 - u;
    case KernelKind::kUniform: return 1.0;
    case KernelKind::kTabulated: {
      if (u <= table.front().first) return table.front().second;
      for (std::size_t k = 1; k < table.size(); ++k) {
        if (u <= table[k].first) {
          const auto [u0, k0] = table[k - 1];
          const auto [u1, k1] = table[k];
          return k0 + (k1 - k0) * (u - u0) / (u1 - u0);
        }
      }
      return table.back().second;
    }
  }
  return 0.0;
}

void ShacConfig::validate() const {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw validation_error("inference.bandwidth must be positive");
  }
  if (kernel != KernelKind::kTabulated) return;
  if (table.size() < 2 || table.front().first != 0.0 || table.front().second != 1.0) {
    throw validation_error("tabulated kernel must start at (0, 1) with at least two knots");
  }
  for (std::size_t k = 1; k < table.size(); ++k) {
    if (!(table[k].first > table[k - 1].first) || table[k].first > 1.0) {
      throw validation_error("tabulated kernel knots must increase within [0, 1]");
    }
    if (!std::isfinite(table[k].second)) {
      throw validation_error("tabulated kernel values must be finite");
    }
  }
}

KernelKind parse_kernel(const std::string& name) {
  if (name == "bartlett") return KernelKind::kBartlett;
  if (name == "uniform") return KernelKind::kUniform;
  if (name == "tabulated") return KernelKind::kTabulated;
  throw validation_error("unknown kernel '" + name + "' (bartlett, uniform, tabulated)");
}

std::string kernel_name(KernelKind k) {
  switch (k) {
    case KernelKind::kBartlett: return "bartlett";
    case KernelKind::kUniform: return "uniform";
    case KernelKind::kTabulated: return "tabulated";
  }
  return "?";
}

DistanceSource DistanceSource::line(std::vector<double> positions) {
  DistanceSource d;
  d.kind_ = Kind::kLine;
  d.pos_ = std::move(positions);
  d.order_.resize(d.pos_.size());
  for (std::size_t i = 0; i < d.order_.size(); ++i) d.order_[i] = static_cast<int>(i);
  std::stable_sort(d.order_.begin(), d.order_.end(),
                   [&](int a, int b) { return d.pos_[a] < d.pos_[b]; });
  return d;
}

DistanceSource DistanceSource::coordinates(Eigen::MatrixXd xy) {
  DistanceSource d;
  d.kind_ = Kind::kCoordinates;
  d.data_ = std::move(xy);
  return d;
}

DistanceSource DistanceSource::matrix(Eigen::MatrixXd m) {
  if (m.rows() != m.cols()) throw validation_error("distance matrix must be square");
  DistanceSource d;
  d.kind_ = Kind::kMatrix;
  d.data_ = std::move(m);
  return d;
}

DistanceSource DistanceSource::from_network(const NetworkSpec& net) {
  if (net.distances) return matrix(*net.distances);
  if (net.positions) return line(*net.positions);
  return matrix(hop_distances(net));
}

int DistanceSource::size() const {
  return kind_ == Kind::kLine ? static_cast<int>(pos_.size())
                              : static_cast<int>(data_.rows());
}

double DistanceSource::operator()(int i, int j) const {
  switch (kind_) {
    case Kind::kLine: return std::abs(pos_[i] - pos_[j]);
    case Kind::kCoordinates: return (data_.row(i) - data_.row(j)).norm();
    case Kind::kMatrix: return data_(i, j);
  }
  return 0.0;
}

std::vector<int> DistanceSource::within(int i, double radius) const {
  std::vector<int> out;
  if (kind_ == Kind::kLine) {
    const double lo = pos_[i] - radius, hi = pos_[i] + radius;
    auto first = std::lower_bound(order_.begin(), order_.end(), lo,
                                  [&](int a, double v) { return pos_[a] < v; });
    for (auto it = first; it != order_.end() && pos_[*it] <= hi; ++it) {
      if (std::abs(pos_[*it] - pos_[i]) <= radius) out.push_back(*it);
    }
    std::sort(out.begin(), out.end());
    return out;
  }
  for (int j = 0; j < size(); ++j) {
    if ((*this)(i, j) <= radius) out.push_back(j);
  }
  return out;
}

namespace {

Eigen::MatrixXd symmetric_product(const Eigen::MatrixXd& rows, const Eigen::MatrixXd& s) {
  Eigen::MatrixXd gamma = rows.transpose() * s / static_cast<double>(rows.rows());
  for (Eigen::Index a = 0; a < gamma.rows(); ++a) {
    for (Eigen::Index b = 0; b < a; ++b) gamma(a, b) = gamma(b, a);
  }
  return gamma;
}

}  // namespace

Eigen::MatrixXd shac_covariance(const Eigen::MatrixXd& rows, const DistanceSource& dist,
                                const ShacConfig& cfg, int threads) {
  cfg.validate();
  const int n = static_cast<int>(rows.rows());
  if (dist.size() != n) throw validation_error("SHAC: distance source size mismatch");
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, rows.cols());
  auto work = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      for (int j : dist.within(i, cfg.bandwidth)) {
        const double k = cfg.weight(dist(i, j) / cfg.bandwidth);
        if (k != 0.0) s.row(i) += k * rows.row(j);
      }
    }
  };
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    work(0, n);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (n + threads - 1) / threads;
    for (int b = 0; b < n; b += chunk) pool.emplace_back(work, b, std::min(n, b + chunk));
    for (auto& th : pool) th.join();
  }
  return symmetric_product(rows, s);
}

Eigen::MatrixXd self_pair_covariance(const Eigen::MatrixXd& rows) {
  return symmetric_product(rows, rows);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw validation_error("normal quantile needs p in (0, 1)");
  return boost::math::quantile(boost::math::normal(), p);
}

Interval pointwise_ci(double value, double gamma, int n_units, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw validation_error("alpha must be in (0, 1)");
  if (gamma < 0.0 || !std::isfinite(gamma)) {
    throw inference_error("negative or non-finite variance");
  }
  const double se = std::sqrt(gamma / n_units);
  const double z = normal_quantile(1.0 - alpha / 2.0);
  return {se, value - z * se, value + z * se};
}

BandResult simultaneous_band(const std::vector<double>& values, const Eigen::MatrixXd& cov,
                             int n_units, double alpha, int n_draws, std::uint64_t seed) {
  const auto k = static_cast<Eigen::Index>(values.size());
  if (cov.rows() != k || cov.cols() != k || k == 0) {
    throw validation_error("band: covariance does not match the estimates");
  }
  if (n_draws < 1) throw validation_error("band: n_draws must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw validation_error("alpha must be in (0, 1)");
  if (cov.cwiseAbs().maxCoeff() == 0.0) throw inference_error("band: all-zero covariance");
  BandResult out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  Eigen::VectorXd lambda = eig.eigenvalues();
  const double top = std::max(lambda.maxCoeff(), 0.0);
  for (Eigen::Index a = 0; a < k; ++a) {
    if (lambda(a) < 0.0) {
      if (lambda(a) < -1e-12 * top) out.projected = true;
      lambda(a) = 0.0;
    }
  }
  const Eigen::MatrixXd root = eig.eigenvectors() * lambda.cwiseSqrt().asDiagonal();
  Eigen::VectorXd sd(k);
  for (Eigen::Index a = 0; a < k; ++a) sd(a) = std::sqrt(std::max(cov(a, a), 0.0));

  std::vector<double> stat(n_draws);
  std::normal_distribution<double> normal;
  Eigen::VectorXd e(k);
  for (int d = 0; d < n_draws; ++d) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(d)};
    std::mt19937_64 gen(seq);
    for (Eigen::Index a = 0; a < k; ++a) e(a) = normal(gen);
    normal.reset();
    const Eigen::VectorXd z = root * e;
    double m = 0.0;
    for (Eigen::Index a = 0; a < k; ++a) {
      if (sd(a) > 0.0) m = std::max(m, std::abs(z(a)) / sd(a));
    }
    stat[d] = m;
  }
  std::sort(stat.begin(), stat.end());
  const auto idx = static_cast<std::size_t>(
      std::ceil((1.0 - alpha) * static_cast<double>(n_draws)) - 1.0);
  out.multiplier = stat[std::min(idx, stat.size() - 1)];
  for (Eigen::Index a = 0; a < k; ++a) {
    const double se = sd(a) / std::sqrt(static_cast<double>(n_units));
    out.intervals.push_back({se, values[a] - out.multiplier * se,
                             values[a] + out.multiplier * se});
  }
  return out;
}

}  // namespace spilldid
