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

#include "exposure.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <set>

#include "csv.hpp"
#include "error.hpp"

namespace spilldid {

namespace {

void row_normalize_in_place(Eigen::MatrixXd& w) {
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    const double s = w.row(i).sum();
    if (s > 0.0) w.row(i) /= s;
  }
}

}  // namespace

NetworkSpec network_from_weights(Eigen::MatrixXd weights, bool row_normalize) {
  if (weights.rows() != weights.cols()) {
    throw validation_error("network: weight matrix must be square");
  }
  for (Eigen::Index i = 0; i < weights.rows(); ++i) {
    if (weights(i, i) != 0.0) {
      throw validation_error("network: w[i][i] must be 0 (unit " +
                             std::to_string(i + 1) + ")");
    }
  }
  if (row_normalize) row_normalize_in_place(weights);
  NetworkSpec net;
  net.weights = std::move(weights);
  return net;
}

NetworkSpec network_from_distances(const Eigen::MatrixXd& distances, double cutoff,
                                   bool row_normalize) {
  const Eigen::Index n = distances.rows();
  if (distances.cols() != n) throw validation_error("network: distance matrix must be square");
  if (!(cutoff > 0.0)) throw validation_error("network: cutoff must be positive");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (distances(i, i) != 0.0) {
      throw validation_error("network: distance diagonal must be 0");
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      if (distances(i, j) < 0.0 || !std::isfinite(distances(i, j))) {
        throw validation_error("network: distances must be finite and nonnegative");
      }
      if (distances(i, j) != distances(j, i)) {
        throw validation_error("network: distance matrix must be symmetric");
      }
    }
  }
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j && distances(i, j) <= cutoff) w(i, j) = 1.0;
    }
  }
  NetworkSpec net = network_from_weights(std::move(w), row_normalize);
  net.distances = distances;
  return net;
}

NetworkSpec line_network(int n, bool row_normalize, int radius) {
  if (n <= 0) throw validation_error("line network: need at least one unit");
  if (radius < 1) throw validation_error("line network: radius must be >= 1");
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = std::max(0, i - radius); j <= std::min(n - 1, i + radius); ++j) {
      if (j != i) w(i, j) = 1.0;
    }
  }
  NetworkSpec net = network_from_weights(std::move(w), row_normalize);
  std::vector<double> pos(n);
  for (int i = 0; i < n; ++i) pos[i] = i + 1.0;
  net.positions = std::move(pos);
  return net;
}

NetworkSpec load_network(const std::string& path,
                         const std::vector<std::string>& unit_ids,
                         const NetworkOptions& options) {
  const csv::Table table = csv::read(path);
  const int n = static_cast<int>(unit_ids.size());
  std::map<std::string, int> index;
  for (int i = 0; i < n; ++i) index[unit_ids[i]] = i;
  auto lookup = [&](const std::string& id) {
    auto it = index.find(id);
    if (it == index.end()) {
      throw validation_error("network: unit '" + id + "' is not in the panel");
    }
    return it->second;
  };

  const int c_i = table.column("i");
  const int c_j = table.column("j");
  if (c_i >= 0 && c_j >= 0) {
    const int c_w = table.column("weight");
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (const auto& row : table.rows) {
      const int a = lookup(row.at(c_i));
      const int b = lookup(row.at(c_j));
      if (a == b) throw validation_error("network: self edge for unit '" + row.at(c_i) + "'");
      double value = 1.0;
      if (c_w >= 0 && !csv::parse_double(row.at(c_w), value)) {
        throw validation_error("network: non-numeric edge weight");
      }
      w(a, b) = value;
    }
    return network_from_weights(std::move(w), options.row_normalize);
  }

  // Dense matrix; the header lists unit ids, optionally after a leading label
  // column that carries each row's unit id.
  std::vector<std::string> cols = table.header;
  bool row_ids = false;
  if (static_cast<int>(cols.size()) == n + 1) {
    row_ids = true;
    cols.erase(cols.begin());
  }
  if (static_cast<int>(cols.size()) != n || static_cast<int>(table.rows.size()) != n) {
    throw validation_error("network: expected an edge list (i,j[,weight]) or an " +
                           std::to_string(n) + "x" + std::to_string(n) + " matrix");
  }
  std::vector<int> col_unit(n);
  for (int k = 0; k < n; ++k) col_unit[k] = lookup(cols[k]);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  std::set<int> rows_seen;
  for (int r = 0; r < n; ++r) {
    const auto& row = table.rows[r];
    const int unit = row_ids ? lookup(row.at(0)) : col_unit[r];
    if (!rows_seen.insert(unit).second) throw validation_error("network: duplicate matrix row");
    for (int k = 0; k < n; ++k) {
      double v;
      if (!csv::parse_double(row.at(k + (row_ids ? 1 : 0)), v)) {
        throw validation_error("network: non-numeric matrix entry");
      }
      m(unit, col_unit[k]) = v;
    }
  }
  if (options.rule == DistanceRule::kCutoff) {
    return network_from_distances(m, options.cutoff, options.row_normalize);
  }
  return network_from_weights(std::move(m), options.row_normalize);
}

Eigen::MatrixXd hop_distances(const NetworkSpec& net) {
  const int n = net.size();
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && (net.weights(i, j) != 0.0 || net.weights(j, i) != 0.0)) {
        adj[i].push_back(j);
      }
    }
  }
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd d = Eigen::MatrixXd::Constant(n, n, inf);
  for (int s = 0; s < n; ++s) {
    d(s, s) = 0.0;
    std::deque<int> queue{s};
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (int v : adj[u]) {
        if (d(s, v) == inf) {
          d(s, v) = d(s, u) + 1.0;
          queue.push_back(v);
        }
      }
    }
  }
  return d;
}

ExposureConfig ExposureConfig::three_state() {
  ExposureConfig cfg;
  cfg.bins = {{0.5, "low", 1.0}, {1.0, "high", 2.0}};
  return cfg;
}

ExposureConfig ExposureConfig::binary() {
  ExposureConfig cfg;
  cfg.bins = {{std::numeric_limits<double>::infinity(), "positive", 1.0}};
  return cfg;
}

void ExposureConfig::validate() const {
  if (kernel.empty()) throw validation_error("exposure: temporal kernel is empty");
  if (bins.empty()) throw validation_error("exposure: at least one positive bin is required");
  std::set<std::string> seen{zero_label};
  double prev = 0.0;
  for (const auto& b : bins) {
    if (!(b.upper > prev)) {
      throw validation_error("exposure: bin thresholds must be positive and strictly increasing");
    }
    if (!seen.insert(b.label).second) {
      throw validation_error("exposure: duplicate state label '" + b.label + "'");
    }
    prev = b.upper;
  }
}

double ExposureConfig::psi(int lag) const {
  if (lag < 0) return 0.0;
  return kernel[std::min<std::size_t>(static_cast<std::size_t>(lag), kernel.size() - 1)];
}

std::vector<std::string> ExposureConfig::labels() const {
  std::vector<std::string> out{zero_label};
  for (const auto& b : bins) out.push_back(b.label);
  return out;
}

int ExposureConfig::state_of(double raw) const {
  if (raw == 0.0) return 0;
  if (raw < 0.0 || std::isnan(raw)) {
    throw validation_error("exposure: raw index must be nonnegative (got " +
                           csv::format_double(raw) + ")");
  }
  for (std::size_t k = 0; k < bins.size(); ++k) {
    if (raw <= bins[k].upper) return static_cast<int>(k) + 1;
  }
  throw validation_error("exposure: raw index " + csv::format_double(raw) +
                         " exceeds the top bin " + csv::format_double(bins.back().upper));
}

Eigen::MatrixXd raw_exposure(const PanelDataset& ds, const NetworkSpec& net,
                             const ExposureConfig& cfg) {
  if (net.size() != ds.n_units) {
    throw validation_error("exposure: network has " + std::to_string(net.size()) +
                           " units, panel has " + std::to_string(ds.n_units));
  }
  const int n = ds.n_units;
  Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(n, ds.n_periods);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double w = net.weights(i, j);
      if (j == i || w == 0.0 || ds.never_treated(j)) continue;
      const int g = ds.cohort[j];
      for (int t = g; t <= ds.n_periods; ++t) raw(i, t - 1) += w * cfg.psi(t - g);
    }
  }
  return raw;
}

Eigen::MatrixXi coarsen(const Eigen::MatrixXd& raw, const ExposureConfig& cfg) {
  cfg.validate();
  Eigen::MatrixXi state(raw.rows(), raw.cols());
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    for (Eigen::Index t = 0; t < raw.cols(); ++t) state(i, t) = cfg.state_of(raw(i, t));
  }
  return state;
}

ExposurePath build_exposure(const PanelDataset& ds, const NetworkSpec& net,
                            const ExposureConfig& cfg) {
  ExposurePath path;
  path.raw = raw_exposure(ds, net, cfg);
  path.state = coarsen(path.raw, cfg);
  path.labels = cfg.labels();
  path.doses.push_back(0.0);
  for (const auto& b : cfg.bins) path.doses.push_back(b.dose);
  return path;
}

std::vector<std::pair<int, int>> two_date_state(const ExposurePath& exposure,
                                                int n_periods, int cohort,
                                                int event_time, int anticipation) {
  const Period t0 = baseline_period(cohort, anticipation);
  const Period t = cohort + event_time;
  if (t < 1 || t > n_periods) {
    throw validation_error("two_date_state: period g+l=" + std::to_string(t) +
                           " outside 1.." + std::to_string(n_periods));
  }
  std::vector<std::pair<int, int>> out(exposure.state.rows());
  for (Eigen::Index i = 0; i < exposure.state.rows(); ++i) {
    out[i] = {exposure.at(static_cast<int>(i), t), exposure.at(static_cast<int>(i), t0)};
  }
  return out;
}

double dose(const std::string& label, const ExposureConfig& cfg) {
  if (label == cfg.zero_label) return 0.0;
  for (const auto& b : cfg.bins) {
    if (b.label == label) return b.dose;
  }
  throw validation_error("exposure: unknown state label '" + label + "'");
}

}  // namespace spilldid
