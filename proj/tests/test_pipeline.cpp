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


#include <cmath>

#include "doctest.h"
#include "error.hpp"
#include "fixtures.hpp"
#include "pipeline.hpp"
#include "report.hpp"
#include "simulate.hpp"

using namespace spilldid;
using namespace spilldid::testing;

namespace {

EstimationResult run(const DgpDraw& d, const ExposurePath& e, EstimationOptions opt) {
  return estimate_all(d.panel, e, DistanceSource::from_network(d.network), opt);
}

// Application-style panel: units at random planar sites, binary exposure
// from a distance cutoff, population weights, two strata and two basis
// columns. Outcomes carry a unit effect, a common trend, tau = 1 on own
// adoption and gamma = 0.5 on positive exposure for every unit.
struct ApplicationPanel {
  PanelDataset ds;
  NetworkSpec net;
  ExposurePath exposure;
  Eigen::MatrixXd dist;
  static constexpr double kTau = 1.0;
  static constexpr double kGamma = 0.5;

  ApplicationPanel() {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> u(0.0, 100.0);
    std::uniform_int_distribution<int> pick(0, 3);
    const int n = 600, periods = 8;
    const int choices[] = {4, 6, kNeverTreated, kNeverTreated};
    Eigen::MatrixXd xy(n, 2);
    std::vector<int> cohorts(n);
    std::vector<double> weights(n);
    for (int i = 0; i < n; ++i) {
      xy(i, 0) = u(rng);
      xy(i, 1) = u(rng);
      cohorts[i] = choices[pick(rng)];
      weights[i] = std::exp(0.5 * z(rng));
    }
    dist.resize(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) dist(i, j) = (xy.row(i) - xy.row(j)).norm();
    }
    ds = make_panel(cohorts, Eigen::MatrixXd::Zero(n, periods), weights);
    ds.stratum_labels = {"urban", "rural"};
    ds.basis.resize(n, 2);
    ds.basis_names = {"premean", "logpop"};
    net = network_from_distances(dist, 4.0);
    net.distances = dist;
    exposure = build_exposure(ds, net, ExposureConfig::binary());
    for (int i = 0; i < n; ++i) {
      ds.stratum[i] = xy(i, 0) < 50.0 ? 0 : 1;
      const double alpha = z(rng);
      ds.basis(i, 0) = alpha + 0.1 * z(rng);
      ds.basis(i, 1) = std::log(weights[i]);
      for (Period t = 1; t <= periods; ++t) {
        const double p = exposure.at(i, t) != 0 ? 1.0 : 0.0;
        ds.outcome(i, t - 1) = alpha + 0.1 * t + kTau * (ds.treated(i, t) ? 1.0 : 0.0) +
                               kGamma * p + 0.3 * z(rng);
      }
    }
  }

  // Weighted cohort truths at event time l.
  double truth_dte(int g, int l) const {
    double w = 0.0, s = 0.0;
    for (int i = 0; i < ds.n_units; ++i) {
      if (ds.cohort[i] != g) continue;
      w += ds.weight[i];
      s += ds.weight[i] * (kTau + kGamma * (exposure.at(i, g + l) != 0));
    }
    return s / w;
  }
};

}  // namespace

TEST_CASE("options validation rejects bad settings before estimation") {
  EstimationOptions o;
  o.alpha = 1.5;
  CHECK_THROWS_AS(o.validate(), Error);
  o = {};
  o.min_cell = 0;
  CHECK_THROWS_AS(o.validate(), Error);
  o = {};
  o.bandwidth = -1.0;
  CHECK_THROWS_AS(o.validate(), Error);
  o = {};
  o.kernel = KernelKind::kTabulated;
  CHECK_THROWS_AS(o.validate(), Error);
}

TEST_CASE("DTE equals DSE plus CSE at cell and event-time level") {
  const DgpDraw d = generate_dgp(DgpConfig::make(Design::kDgp2, 500, 6), 0);
  for (auto kind : {FirstStageKind::kSaturated, FirstStageKind::kDose}) {
    EstimationOptions opt;
    opt.first_stage = kind;
    const EstimationResult r = run(d, d.exposure, opt);
    int checked = 0;
    for (const auto& c : r.cells) {
      if (c.component != Component::kDTE || !c.admissible) continue;
      const auto* dse = r.find(Component::kDSE, c.g, c.l);
      const auto* cse = r.find(Component::kCSE, c.g, c.l);
      CHECK(std::abs(c.value - dse->value - cse->value) <= 1e-12);
      ++checked;
    }
    for (int l = 0; l <= 2; ++l) {
      const auto* dte = r.find_event(Component::kDTE, l);
      if (!dte || !dte->admissible) continue;
      const double sum = r.find_event(Component::kDSE, l)->value +
                         r.find_event(Component::kCSE, l)->value;
      CHECK(std::abs(dte->value - sum) <= 1e-12);
      CHECK(dte->ci.has_value());
      CHECK(dte->band.has_value());
      CHECK(dte->band->hi - dte->band->lo >= dte->ci->hi - dte->ci->lo);
      ++checked;
    }
    CHECK(checked > 0);
  }
}

TEST_CASE("zero exposure collapses the proposal to the standard DID") {
  const DgpDraw d = generate_dgp(DgpConfig::make(Design::kDgp1, 300, 2), 0);
  ExposurePath zero = d.exposure;
  zero.raw.setZero();
  zero.state.setZero();
  EstimationOptions opt;
  opt.band_draws = 0;
  const EstimationResult r = run(d, zero, opt);
  int checked = 0;
  for (const auto& c : r.cells) {
    if (c.component == Component::kCSE) {
      REQUIRE(c.admissible);
      CHECK(c.value == 0.0);
    }
    if (c.component != Component::kDIDBenchmark) continue;
    const auto* dse = r.find(Component::kDSE, c.g, c.l);
    const auto* pde = r.find(Component::kLocalPDE, c.g, c.l);
    REQUIRE(dse != nullptr);
    REQUIRE(pde != nullptr);
    CHECK(dse->value == c.value);
    CHECK(pde->value == c.value);
    ++checked;
  }
  CHECK(checked > 0);
}

TEST_CASE("application-style panel runs end to end with the structured first stage") {
  ApplicationPanel app;
  EstimationOptions opt;
  opt.first_stage = FirstStageKind::kStructured;
  opt.spline_df = 3;
  opt.event_max = 2;
  opt.bandwidth = 10.0;
  opt.band_draws = 500;
  opt.strict_inference = true;
  const EstimationResult r =
      estimate_all(app.ds, app.exposure, DistanceSource::from_network(app.net), opt);
  for (int g : {4, 6}) {
    for (int l = 0; l <= 2; ++l) {
      const auto* dte = r.find(Component::kDTE, g, l);
      REQUIRE(dte != nullptr);
      REQUIRE(dte->admissible);
      REQUIRE(dte->ci.has_value());
      CHECK(std::abs(dte->value - app.truth_dte(g, l)) <= 4.0 * dte->ci->se);
    }
  }
  int diagnostics = 0;
  for (const auto& c : r.cells) {
    if (c.component == Component::kCSENeverTreated && c.admissible) ++diagnostics;
  }
  CHECK(diagnostics > 0);
  for (int l = 0; l <= 2; ++l) {
    const auto* dte = r.find_event(Component::kDTE, l);
    REQUIRE(dte != nullptr);
    CHECK(dte->admissible);
    CHECK(dte->cohorts == std::vector<int>{4, 6});
  }
}

TEST_CASE("structured first stage without basis columns is a validation error") {
  const DgpDraw d = generate_dgp(DgpConfig::make(Design::kDgp1, 200, 2), 0);
  EstimationOptions opt;
  opt.first_stage = FirstStageKind::kStructured;
  try {
    run(d, d.exposure, opt);
    FAIL("expected a validation error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kValidation);
  }
}

TEST_CASE("estimation is deterministic and thread-count invariant") {
  const DgpDraw d = generate_dgp(DgpConfig::make(Design::kDgp3, 300, 2), 0);
  EstimationOptions opt;
  opt.first_stage = FirstStageKind::kDose;
  opt.band_draws = 300;
  TempDir dir;
  const EstimationResult a = run(d, d.exposure, opt);
  opt.threads = 2;
  const EstimationResult b = run(d, d.exposure, opt);
  write_estimates_csv(a, dir.file("a.csv"));
  write_estimates_csv(b, dir.file("b.csv"));
  CHECK(read_file(dir.file("a.csv")) == read_file(dir.file("b.csv")));
}

TEST_CASE("report files carry the documented columns") {
  const DgpDraw d = generate_dgp(DgpConfig::make(Design::kDgp1, 300, 2), 0);
  EstimationOptions opt;
  opt.band_draws = 100;
  const EstimationResult r = run(d, d.exposure, opt);
  TempDir dir;
  write_estimates_csv(r, dir.file("est.csv"));
  write_support_csv(r, d.panel, d.exposure, dir.file("sup.csv"));
  write_benchmark_csv(r, dir.file("bench.csv"));
  write_exposure_csv(d.panel, d.exposure, dir.file("exp.csv"));
  const std::string est = read_file(dir.file("est.csv"));
  CHECK(est.rfind("level,component,g,l,t,value,admissible,note,n_target,target_mass_retained,"
                  "se,ci_lo,ci_hi,band_lo,band_hi,cohorts,weights\n",
                  0) == 0);
  const std::string bench = read_file(dir.file("bench.csv"));
  CHECK(bench.find("gap_did_minus_dte") != std::string::npos);
  // Spillovers make the benchmark differ from the DTE: the gap is populated.
  bool gap = false;
  for (const auto& c : r.cells) {
    if (c.component != Component::kDIDBenchmark) continue;
    const auto* dte = r.find(Component::kDTE, c.g, c.l);
    if (dte && dte->admissible && dte->value != c.value) gap = true;
  }
  CHECK(gap);
  const std::string exp = read_file(dir.file("exp.csv"));
  CHECK(exp.rfind("unit,period,raw,state,dose\n", 0) == 0);
  CHECK(std::count(exp.begin(), exp.end(), '\n') == 1 + 300 * 6);
}
