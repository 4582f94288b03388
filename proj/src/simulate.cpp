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


#include "simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <random>
#include <thread>

#include "error.hpp"

namespace spilldid {

Design parse_design(const std::string& name) {
  if (name == "dgp1") return Design::kDgp1;
  if (name == "dgp2") return Design::kDgp2;
  if (name == "dgp3") return Design::kDgp3;
  throw validation_error("invalid design '" + name + "' (dgp1, dgp2, dgp3)");
}

std::string design_name(Design d) {
  switch (d) {
    case Design::kDgp1: return "dgp1";
    case Design::kDgp2: return "dgp2";
    case Design::kDgp3: return "dgp3";
  }
  return "?";
}

Assignment parse_assignment(const std::string& name) {
  if (name == "iid_equal") return Assignment::kIidEqual;
  if (name == "block12_balanced") return Assignment::kBlock12;
  throw validation_error("invalid assignment '" + name + "' (iid_equal, block12_balanced)");
}

std::string assignment_name(Assignment a) {
  return a == Assignment::kIidEqual ? "iid_equal" : "block12_balanced";
}

DgpConfig DgpConfig::make(Design design, int n_units, std::uint64_t seed) {
  DgpConfig cfg;
  cfg.design = design;
  cfg.n_units = n_units;
  cfg.seed = seed;
  cfg.kappa = design == Design::kDgp1 ? 0.0 : 0.4;
  cfg.assignment = design == Design::kDgp3 ? Assignment::kBlock12 : Assignment::kIidEqual;
  return cfg;
}

void DgpConfig::validate() const {
  if (n_units < 2) throw validation_error("simulation: n must be >= 2");
  if (n_periods < 2) throw validation_error("simulation: T must be >= 2");
  if (cohorts.empty()) throw validation_error("simulation: no cohorts");
  for (int g : cohorts) {
    if (g < 2 || g > n_periods) throw validation_error("simulation: cohort outside 2..T");
  }
  if (min_cell < 1) throw validation_error("simulation: min_cell must be >= 1");
  if (event_max < 0) throw validation_error("simulation: event_max must be >= 0");
  if (line_radius < 1) throw validation_error("simulation: line radius must be >= 1");
  if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale)) {
    throw validation_error("simulation: noise scale must be finite and >= 0");
  }
  if (design == Design::kDgp3 && assignment != Assignment::kBlock12) {
    throw validation_error("dgp3 requires block12_balanced assignment");
  }
  if (assignment == Assignment::kBlock12 && cohorts.size() != 3) {
    throw validation_error("block12_balanced assignment needs exactly three cohorts");
  }
}

double dgp_lambda(Period t) { return 0.2 * (t - 1); }
double dgp_rho(Period t) { return t <= 2 ? 0.0 : 0.3; }
double dgp_tau(int l) { return l <= 0 ? 1.0 : (l == 1 ? 1.5 : 2.0); }

namespace {

// Independent stream per (seed, design, N, replication).
std::mt19937_64 replication_engine(const DgpConfig& cfg, std::uint64_t seed, int replication) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(cfg.design),
                    static_cast<std::uint32_t>(cfg.n_units),
                    static_cast<std::uint32_t>(replication)};
  return std::mt19937_64(seq);
}

std::vector<int> draw_cohorts(const DgpConfig& cfg, std::mt19937_64& gen) {
  std::vector<int> groups = cfg.cohorts;
  groups.push_back(kNeverTreated);
  std::vector<int> out(cfg.n_units);
  if (cfg.assignment == Assignment::kIidEqual) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(groups.size()) - 1);
    for (int& g : out) g = groups[pick(gen)];
    return out;
  }
  // Blocks of 12 line positions hold three units of each group in random
  // order, redrawn until no two never-treated units are adjacent, including
  // across block boundaries.
  std::vector<int> block;
  for (int g : groups) block.insert(block.end(), 3, g);
  for (int start = 0; start < cfg.n_units; start += 12) {
    bool ok = false;
    while (!ok) {
      std::shuffle(block.begin(), block.end(), gen);
      ok = !(start > 0 && out[start - 1] == kNeverTreated && block[0] == kNeverTreated);
      for (std::size_t k = 0; k + 1 < block.size(); ++k) {
        if (block[k] == kNeverTreated && block[k + 1] == kNeverTreated) ok = false;
      }
    }
    for (int k = 0; k < 12 && start + k < cfg.n_units; ++k) out[start + k] = block[k];
  }
  return out;
}

}  // namespace

std::vector<int> assign_cohorts(const DgpConfig& cfg, std::uint64_t seed, int replication) {
  cfg.validate();
  auto gen = replication_engine(cfg, seed, replication);
  return draw_cohorts(cfg, gen);
}

DgpDraw generate_dgp(const DgpConfig& cfg, int replication) {
  cfg.validate();
  auto gen = replication_engine(cfg, cfg.seed, replication);
  const int n = cfg.n_units;
  const int t_max = cfg.n_periods;
  DgpDraw d;
  PanelDataset& ds = d.panel;
  ds.n_units = n;
  ds.n_periods = t_max;
  ds.cohort = draw_cohorts(cfg, gen);
  for (int i = 0; i < n; ++i) ds.unit_ids.push_back(std::to_string(i + 1));
  for (Period t = 1; t <= t_max; ++t) ds.period_labels.push_back(std::to_string(t));
  ds.weight.assign(n, 1.0);
  ds.stratum.assign(n, 0);
  ds.stratum_labels = {"all"};
  ds.basis = Eigen::MatrixXd(n, 0);
  ds.exposure_only.assign(n, false);
  ds.outcome = Eigen::MatrixXd::Zero(n, t_max);

  PotentialOutcomes& po = d.po;
  std::normal_distribution<double> normal;
  po.x.resize(n);
  po.alpha.resize(n);
  po.eps.resize(n, t_max);
  for (int i = 0; i < n; ++i) po.x(i) = normal(gen);
  for (int i = 0; i < n; ++i) po.alpha(i) = normal(gen);
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < t_max; ++t) po.eps(i, t) = cfg.noise_scale * normal(gen);
  }

  d.network = line_network(n, true, cfg.line_radius);
  d.exposure = build_exposure(ds, d.network, ExposureConfig::three_state());

  po.never_h.resize(n, t_max);
  po.never_0.resize(n, t_max);
  po.own_h.resize(n, t_max);
  po.own_0.resize(n, t_max);
  for (int i = 0; i < n; ++i) {
    const int g = ds.cohort[i];
    for (Period t = 1; t <= t_max; ++t) {
      const int c = t - 1;
      const double q = d.exposure.doses[d.exposure.at(i, t)];
      const double base = po.alpha(i) + dgp_lambda(t) + 0.5 * po.x(i) + po.eps(i, c);
      po.never_0(i, c) = base;
      po.never_h(i, c) = base + dgp_rho(t) * q;
      if (g != kNeverTreated && t >= g) {
        po.own_0(i, c) = base + dgp_tau(t - g);
        po.own_h(i, c) = base + dgp_tau(t - g) + (dgp_rho(t) + cfg.kappa) * q;
      } else {
        po.own_0(i, c) = po.never_0(i, c);
        po.own_h(i, c) = po.never_h(i, c);
      }
      ds.outcome(i, c) = po.own_h(i, c);
    }
  }
  return d;
}

CellTruth finite_population_truth(const PanelDataset& ds, const PotentialOutcomes& po,
                                  int g, int l) {
  const Period t = g + l;
  if (t < 1 || t > ds.n_periods) throw validation_error("truth: period out of range");
  double w = 0.0, dse = 0.0, cse = 0.0;
  for (int i = 0; i < ds.n_units; ++i) {
    if (!ds.in_cohort(i, g)) continue;
    const int c = t - 1;
    w += ds.weight[i];
    dse += ds.weight[i] * (po.own_h(i, c) - po.never_h(i, c));
    cse += ds.weight[i] * (po.never_h(i, c) - po.never_0(i, c));
  }
  if (w == 0.0) throw validation_error("truth: empty cohort");
  CellTruth out{dse / w, cse / w, 0.0};
  out.dte = out.dse + out.cse;
  return out;
}

CellTruth event_time_truth(const PanelDataset& ds, const PotentialOutcomes& po,
                           const std::vector<int>& cohorts,
                           const std::vector<double>& weights, int l) {
  CellTruth out;
  for (std::size_t k = 0; k < cohorts.size(); ++k) {
    const CellTruth c = finite_population_truth(ds, po, cohorts[k], l);
    out.dse += weights[k] * c.dse;
    out.cse += weights[k] * c.cse;
  }
  out.dte = out.dse + out.cse;
  return out;
}

double verify_unit_taxonomy(const PanelDataset& ds, const PotentialOutcomes& po) {
  double worst = 0.0;
  for (int i = 0; i < ds.n_units; ++i) {
    for (Period t = 1; t <= ds.n_periods; ++t) {
      if (!ds.treated(i, t)) continue;
      const int c = t - 1;
      const double total = po.own_h(i, c) - po.never_0(i, c);
      const double switching = po.own_h(i, c) - po.never_h(i, c);
      const double spill_control = po.never_h(i, c) - po.never_0(i, c);
      const double pure = po.own_0(i, c) - po.never_0(i, c);
      const double spill_treated = po.own_h(i, c) - po.own_0(i, c);
      worst = std::max(worst, std::abs(total - switching - spill_control));
      worst = std::max(worst, std::abs(total - pure - spill_treated));
    }
  }
  return worst;
}

double verify_did_decomposition(const PanelDataset& ds, const PotentialOutcomes& po, int g) {
  const Period t = g;
  const Period t0 = baseline_period(g, ds.anticipation);
  const int c = t - 1, c0 = t0 - 1;
  struct Sums {
    double w = 0.0, did = 0.0, pde = 0.0, ast = 0.0, base = 0.0, cse_t = 0.0, cse_t0 = 0.0,
           trend = 0.0;
  } cohort, never;
  for (int i = 0; i < ds.n_units; ++i) {
    const bool in_g = ds.in_cohort(i, g);
    if (!in_g && !ds.in_source(i)) continue;
    Sums& s = in_g ? cohort : never;
    const double w = ds.weight[i];
    s.w += w;
    s.did += w * (ds.y(i, t) - ds.y(i, t0));
    s.pde += w * (po.own_0(i, c) - po.never_0(i, c));
    s.ast += w * (po.own_h(i, c) - po.own_0(i, c));
    s.base += w * (po.never_h(i, c0) - po.never_0(i, c0));
    s.cse_t += w * (po.never_h(i, c) - po.never_0(i, c));
    s.cse_t0 += w * (po.never_h(i, c0) - po.never_0(i, c0));
    s.trend += w * (po.never_0(i, c) - po.never_0(i, c0));
  }
  if (cohort.w == 0.0 || never.w == 0.0) {
    throw validation_error("decomposition needs a nonempty cohort and never-treated pool");
  }
  const double lhs = cohort.did / cohort.w - never.did / never.w;
  const double rhs = cohort.pde / cohort.w + cohort.ast / cohort.w - cohort.base / cohort.w -
                     never.cse_t / never.w + never.cse_t0 / never.w +
                     (cohort.trend / cohort.w - never.trend / never.w);
  return std::abs(lhs - rhs);
}

std::string mc_estimator_name(McEstimator e) {
  switch (e) {
    case McEstimator::kDSE: return "DSE";
    case McEstimator::kCSE: return "CSE";
    case McEstimator::kDTE: return "DTE";
    case McEstimator::kDID: return "DID";
    case McEstimator::kCS: return "CS";
  }
  return "?";
}

const McRow* McReport::row(const std::string& method, const std::string& target) const {
  for (const auto& r : rows) {
    if (r.method == method && r.target == target) return &r;
  }
  return nullptr;
}

EstimationOptions mc_estimation_options(const DgpConfig& cfg, const McOptions& options) {
  EstimationOptions est;
  est.min_cell = cfg.min_cell;
  est.event_max = cfg.event_max;
  est.first_stage = options.first_stage;
  est.inference = true;
  est.alpha = options.alpha;
  est.kernel = options.kernel;
  est.bandwidth = options.bandwidth;
  est.band_draws = 0;
  est.seed = cfg.seed;
  est.threads = 1;
  est.benchmarks = true;
  est.local_pde = false;
  est.diagnostics = false;
  est.strict_inference = false;
  return est;
}

std::vector<ReplicationRecord> run_replication(const DgpConfig& cfg, const McOptions& options,
                                               int replication) {
  const DgpDraw draw = generate_dgp(cfg, replication);
  const DistanceSource dist = DistanceSource::line(*draw.network.positions);
  const EstimationResult res =
      estimate_all(draw.panel, draw.exposure, dist, mc_estimation_options(cfg, options));
  std::vector<ReplicationRecord> out;
  const std::pair<McEstimator, Component> pairs[] = {
      {McEstimator::kDSE, Component::kDSE},
      {McEstimator::kCSE, Component::kCSE},
      {McEstimator::kDTE, Component::kDTE},
      {McEstimator::kDID, Component::kDIDBenchmark},
      {McEstimator::kCS, Component::kCSBenchmark}};
  for (int l = 0; l <= cfg.event_max; ++l) {
    const EventTimeEstimate* anchor = res.find_event(Component::kDSE, l);
    const bool set_ok = anchor && !anchor->cohorts.empty();
    CellTruth truth;
    if (set_ok) truth = event_time_truth(draw.panel, draw.po, anchor->cohorts, anchor->weights, l);
    for (const auto& [est, comp] : pairs) {
      ReplicationRecord r;
      r.replication = replication;
      r.l = l;
      r.estimator = est;
      const EventTimeEstimate* e = res.find_event(comp, l);
      r.available = set_ok && e && e->admissible;
      if (r.available) {
        r.value = e->value;
        r.truth = est == McEstimator::kDSE ? truth.dse
                  : est == McEstimator::kCSE ? truth.cse
                                             : truth.dte;
        r.truth_dse = truth.dse;
        if (e->ci) {
          r.has_ci = true;
          r.ci_lo = e->ci->lo;
          r.ci_hi = e->ci->hi;
        }
      }
      out.push_back(r);
    }
  }
  return out;
}

std::vector<McRow> summarize(const std::vector<ReplicationRecord>& records, int replications,
                             int n_event_times) {
  struct Spec {
    const char* method;
    const char* target;
    McEstimator est;
    bool vs_dse;
  };
  const Spec specs[] = {{"Proposed DSE", "DSE", McEstimator::kDSE, false},
                        {"Proposed CSE", "CSE", McEstimator::kCSE, false},
                        {"Proposed DTE", "DTE", McEstimator::kDTE, false},
                        {"Standard DID", "DTE", McEstimator::kDID, false},
                        {"Callaway and Sant'Anna", "DTE", McEstimator::kCS, false},
                        {"Standard DID", "DSE", McEstimator::kDID, true},
                        {"Callaway and Sant'Anna", "DSE", McEstimator::kCS, true}};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<McRow> rows;
  for (const auto& s : specs) {
    McRow row;
    row.method = s.method;
    row.target = s.target;
    row.n_records = replications * n_event_times;
    double err = 0.0, sq = 0.0;
    int hits = 0;
    for (const auto& r : records) {
      if (r.estimator != s.est || !r.available) continue;
      const double truth = s.vs_dse ? r.truth_dse : r.truth;
      const double e = r.value - truth;
      row.n_available += 1;
      err += e;
      sq += e * e;
      if (r.has_ci) {
        row.n_with_ci += 1;
        if (r.ci_lo <= truth && truth <= r.ci_hi) hits += 1;
      }
    }
    row.availability = row.n_records > 0 ? static_cast<double>(row.n_available) / row.n_records
                                         : nan;
    row.bias = row.n_available > 0 ? err / row.n_available : nan;
    row.rmse = row.n_available > 0 ? std::sqrt(sq / row.n_available) : nan;
    row.coverage = row.n_with_ci > 0 ? static_cast<double>(hits) / row.n_with_ci : nan;
    rows.push_back(row);
  }
  return rows;
}

McReport run_monte_carlo(const DgpConfig& cfg, const McOptions& options) {
  cfg.validate();
  if (options.replications < 1) throw validation_error("replications must be >= 1");
  if (options.threads < 1) throw validation_error("threads must be >= 1");
  const int reps = options.replications;
  std::vector<std::vector<ReplicationRecord>> per_rep(reps);
  std::vector<std::string> failure(reps);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next++; r < reps; r = next++) {
      try {
        per_rep[r] = run_replication(cfg, options, r);
      } catch (const std::exception& err) {
        failure[r] = err.what();
      }
    }
  };
  const int threads = std::min(options.threads, reps);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  McReport report;
  report.config = cfg;
  report.replications = reps;
  std::vector<ReplicationRecord> all;
  for (int r = 0; r < reps; ++r) {
    if (!failure[r].empty()) {
      report.failures += 1;
      report.failure_notes.push_back("replication " + std::to_string(r) + ": " + failure[r]);
    }
    all.insert(all.end(), per_rep[r].begin(), per_rep[r].end());
  }
  report.rows = summarize(all, reps, cfg.event_max + 1);
  if (options.keep_records) report.records = std::move(all);
  return report;
}

}  // namespace spilldid
