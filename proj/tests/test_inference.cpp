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


#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <set>

#include "doctest.h"
#include "error.hpp"
#include "fixtures.hpp"
#include "inference.hpp"
#include "pipeline.hpp"
#include "simulate.hpp"
#include "stack_fixture.hpp"

using namespace spilldid;
using namespace spilldid::testing;

namespace {

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("stacked moments vanish at the estimates") {
  for (auto kind : {FirstStageKind::kSaturated, FirstStageKind::kDose,
                    FirstStageKind::kStructured}) {
    Built b = build_stack(Design::kDgp2, 300, kind);
    REQUIRE_FALSE(b.input.contrasts.empty());
    REQUIRE_FALSE(b.input.spillovers.empty());
    const StackedSystem sys(b.draw.panel, b.draw.exposure, b.input);
    CHECK(sys.mean_moments(sys.theta()).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("analytic Jacobian agrees with central differences") {
  for (auto kind : {FirstStageKind::kSaturated, FirstStageKind::kDose,
                    FirstStageKind::kStructured}) {
    Built b = build_stack(Design::kDgp1, 200, kind, 8);
    const StackedSystem sys(b.draw.panel, b.draw.exposure, b.input);
    const Eigen::MatrixXd a = sys.jacobian();
    const Eigen::MatrixXd f = sys.numeric_jacobian();
    CHECK(a.rows() == sys.n_params());
    CHECK(a.cols() == sys.n_params());
    CHECK(max_abs(a - f) <= 1e-6 * max_abs(a));
  }
}

TEST_CASE("system dimension is cells plus first stage plus targets plus shares") {
  Built b = build_stack(Design::kDgp1, 200, FirstStageKind::kDose);
  const StackedSystem sys(b.draw.panel, b.draw.exposure, b.input);
  int cells = 0;
  for (const auto& c : b.input.contrasts) cells += c.n_cells;
  const int eta = static_cast<int>(b.fit.dose->coef.size());
  CHECK(sys.n_params() == cells + eta + static_cast<int>(b.input.contrasts.size()) +
                              static_cast<int>(b.input.spillovers.size()) +
                              static_cast<int>(b.input.share_cohorts.size()));
}

TEST_CASE("share and target blocks have the documented derivatives") {
  Built b = build_stack(Design::kDgp1, 200, FirstStageKind::kSaturated);
  const StackedSystem sys(b.draw.panel, b.draw.exposure, b.input);
  const Eigen::MatrixXd r = sys.jacobian();
  const double n = b.draw.panel.n_units;
  for (int g : b.input.share_cohorts) {
    const int k = sys.share_index(g);
    CHECK(r(k, k) == doctest::Approx(-1.0));
  }
  for (std::size_t k = 0; k < b.dse_keys.size(); ++k) {
    const int idx = sys.contrast_index(k);
    const double w = cohort_mass(b.draw.panel, b.dse_keys[k].first).w;
    CHECK(r(idx, idx) == doctest::Approx(-w / n).epsilon(1e-12));
    // Perturbing the target moves only its own block mean.
    const double eps = 1e-3;
    Eigen::VectorXd theta = sys.theta();
    theta(idx) += eps;
    const Eigen::VectorXd d = sys.mean_moments(theta) - sys.mean_moments(sys.theta());
    Eigen::VectorXd expected = Eigen::VectorXd::Zero(d.size());
    expected(idx) = -eps * w / n;
    CHECK((d - expected).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("influence rows sum to zero and are linear in the gradient") {
  Built b = build_stack(Design::kDgp2, 300, FirstStageKind::kDose);
  const StackedSystem sys(b.draw.panel, b.draw.exposure, b.input);
  const int p = sys.n_params();
  // Pair the first DSE target with the CSE target of the same (g, l).
  int dse = -1, cse = -1;
  for (std::size_t k = 0; k < b.dse_keys.size() && dse < 0; ++k) {
    for (std::size_t j = 0; j < b.cse_keys.size(); ++j) {
      if (b.cse_keys[j] == b.dse_keys[k]) {
        dse = sys.contrast_index(k);
        cse = sys.spillover_index(j);
        break;
      }
    }
  }
  REQUIRE(dse >= 0);
  Eigen::MatrixXd grads = Eigen::MatrixXd::Zero(p, 3);
  grads(dse, 0) = 1.0;
  grads(cse, 1) = 1.0;
  grads(dse, 2) = 1.0;
  grads(cse, 2) = 1.0;
  const Eigen::MatrixXd rows = sys.influence(grads);
  CHECK(rows.colwise().sum().cwiseAbs().maxCoeff() <= 1e-8 * sys.n_units());
  const Eigen::VectorXd diff = rows.col(2) - rows.col(0) - rows.col(1);
  CHECK(diff.cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, max_abs(rows)));
}

TEST_CASE("one-cell DID influence rows are the two-group textbook form") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> z;
  const int n = 50;
  Eigen::MatrixXd y(n, 4);
  std::vector<int> cohorts(n);
  for (int i = 0; i < n; ++i) {
    cohorts[i] = i < 15 ? 3 : (i < 20 ? 4 : kNeverTreated);
    for (int t = 0; t < 4; ++t) y(i, t) = z(rng);
  }
  const PanelDataset ds = make_panel(cohorts, y);
  const ExposurePath e = make_exposure(Eigen::MatrixXi::Zero(n, 4));
  StackInput in;
  in.contrasts.push_back(did_contrast(ds, 3, 0));
  in.contrast_values.push_back(did_benchmark(ds, 3, 0).value);
  in.share_cohorts = {3};
  const StackedSystem sys(ds, e, in);
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(sys.n_params(), 1);
  grad(sys.contrast_index(0), 0) = 1.0;
  const Eigen::VectorXd phi = sys.influence(grad).col(0);

  const Eigen::VectorXd d = long_difference(ds, 3, 2);
  double mg = 0.0, mn = 0.0;
  int ng = 0, nn = 0;
  for (int i = 0; i < n; ++i) {
    if (cohorts[i] == 3) {
      mg += d(i);
      ++ng;
    } else if (cohorts[i] == kNeverTreated) {
      mn += d(i);
      ++nn;
    }
  }
  mg /= ng;
  mn /= nn;
  for (int i = 0; i < n; ++i) {
    double expected = 0.0;
    if (cohorts[i] == 3) expected = double(n) / ng * (d(i) - mg);
    if (cohorts[i] == kNeverTreated) expected = -double(n) / nn * (d(i) - mn);
    CHECK(phi(i) == doctest::Approx(expected).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("kernel weights") {
  ShacConfig bart{KernelKind::kBartlett, 4.0, {}};
  CHECK(bart.weight(0.0) == 1.0);
  CHECK(bart.weight(0.25) == 0.75);
  CHECK(bart.weight(1.0) == 0.0);
  CHECK(bart.weight(1.5) == 0.0);
  ShacConfig uni{KernelKind::kUniform, 4.0, {}};
  CHECK(uni.weight(0.9) == 1.0);
  CHECK(uni.weight(1.1) == 0.0);
  ShacConfig tab{KernelKind::kTabulated, 4.0, {{0.0, 1.0}, {0.5, 0.8}, {1.0, 0.0}}};
  CHECK(tab.weight(0.25) == doctest::Approx(0.9));
  CHECK(tab.weight(0.75) == doctest::Approx(0.4));
  ShacConfig bad{KernelKind::kTabulated, 4.0, {{0.0, 0.5}, {1.0, 0.0}}};
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK(default_bandwidth(200) == 6.0);
  CHECK(default_bandwidth(500) == 8.0);
}

TEST_CASE("line distances and neighbor search") {
  const DistanceSource d = DistanceSource::line({0, 1, 2, 3, 4, 5});
  CHECK(d(1, 4) == 3.0);
  CHECK(d.within(2, 1.5) == std::vector<int>{1, 2, 3});
  const DistanceSource h = DistanceSource::from_network(line_network(6));
  CHECK(h(0, 5) == 5.0);
}

TEST_CASE("SHAC with a vanishing bandwidth equals the self-pair sandwich") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> z;
  const int n = 120;
  Eigen::MatrixXd rows(n, 3);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k) rows(i, k) = z(rng);
  }
  std::vector<double> pos(n);
  for (int i = 0; i < n; ++i) pos[i] = i + 1;
  const DistanceSource d = DistanceSource::line(pos);
  const Eigen::MatrixXd self = self_pair_covariance(rows);
  const Eigen::MatrixXd tiny = shac_covariance(rows, d, {KernelKind::kBartlett, 1e-9, {}});
  CHECK((tiny.array() == self.array()).all());
  const Eigen::MatrixXd wide = shac_covariance(rows, d, {KernelKind::kBartlett, 6.0, {}});
  CHECK((wide.array() == wide.transpose().array()).all());
  const Eigen::MatrixXd threaded = shac_covariance(rows, d, {KernelKind::kBartlett, 6.0, {}}, 3);
  CHECK((wide.array() == threaded.array()).all());
}

TEST_CASE("SHAC on independent rows is centered on the self-pair variance") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> z;
  const int n = 400, reps = 300;
  std::vector<double> pos(n);
  for (int i = 0; i < n; ++i) pos[i] = i;
  const DistanceSource d = DistanceSource::line(pos);
  double sum = 0.0, sum2 = 0.0;
  for (int r = 0; r < reps; ++r) {
    Eigen::MatrixXd rows(n, 1);
    for (int i = 0; i < n; ++i) rows(i, 0) = z(rng);
    const double diff = shac_covariance(rows, d, {KernelKind::kBartlett, 5.0, {}})(0, 0) -
                        self_pair_covariance(rows)(0, 0);
    sum += diff;
    sum2 += diff * diff;
  }
  const double mean = sum / reps;
  const double se = std::sqrt((sum2 / reps - mean * mean) / reps);
  CHECK(std::abs(mean) <= 2.0 * se);
}

TEST_CASE("pointwise intervals") {
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-7));
  const Interval deg = pointwise_ci(1.5, 0.0, 100, 0.05);
  CHECK(deg.lo == 1.5);
  CHECK(deg.hi == 1.5);
  const Interval ci = pointwise_ci(1.0, 4.0, 100, 0.05);
  CHECK(ci.se == doctest::Approx(0.2));
  CHECK(ci.hi == doctest::Approx(1.0 + 0.2 * 1.959963984540054));
  CHECK_THROWS_AS(pointwise_ci(1.0, -1.0, 100, 0.05), Error);
}

TEST_CASE("simultaneous band multipliers") {
  const double z = normal_quantile(0.975);
  const BandResult one =
      simultaneous_band({0.0}, Eigen::MatrixXd::Identity(1, 1), 1, 0.05, 200000, 5);
  CHECK(one.multiplier == doctest::Approx(z).epsilon(0.01));

  // Max of five independent |N(0,1)|: P(max <= c) = (2 Phi(c) - 1)^5.
  boost::math::normal_distribution<double> nd;
  const double oracle = boost::math::quantile(nd, (1.0 + std::pow(0.95, 0.2)) / 2.0);
  CHECK(oracle == doctest::Approx(2.57).epsilon(0.002));
  const BandResult five = simultaneous_band(std::vector<double>(5, 0.0),
                                            Eigen::MatrixXd::Identity(5, 5), 1, 0.05, 100000, 6);
  CHECK(five.multiplier == doctest::Approx(oracle).epsilon(0.01));
  CHECK(five.intervals.size() == 5);

  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::MatrixXd a(4, 4);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) a(i, j) = g(rng);
    }
    const BandResult b =
        simultaneous_band(std::vector<double>(4, 0.0), a * a.transpose(), 10, 0.05, 2000, rep);
    CHECK(b.multiplier >= z);
  }
}

TEST_CASE("event-time covariance is additive across DSE and CSE") {
  const DgpDraw draw = generate_dgp(DgpConfig::make(Design::kDgp2, 500, 4), 1);
  EstimationOptions opt;
  opt.first_stage = FirstStageKind::kDose;
  opt.band_draws = 500;
  const EstimationResult r = estimate_all(draw.panel, draw.exposure,
                                          DistanceSource::from_network(draw.network), opt);
  REQUIRE(r.event_labels.size() % 3 == 0);
  REQUIRE_FALSE(r.event_labels.empty());
  const Eigen::MatrixXd& g = r.event_cov;
  for (std::size_t k = 0; k < r.event_labels.size(); k += 3) {
    CHECK(r.event_labels[k].rfind("DSE:", 0) == 0);
    CHECK(r.event_labels[k + 2].rfind("DTE:", 0) == 0);
    const auto a = static_cast<Eigen::Index>(k);
    const double lhs = g(a + 2, a + 2);
    const double rhs = g(a, a) + g(a + 1, a + 1) + 2.0 * g(a, a + 1);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::abs(lhs));
  }
  CHECK((g.array() == g.transpose().array()).all());
}

TEST_CASE("CS benchmark interval differs from the spatial DID interval on correlated data") {
  const DgpDraw draw = generate_dgp(DgpConfig::make(Design::kDgp1, 500, 2), 0);
  EstimationOptions opt;
  opt.band_draws = 0;
  const EstimationResult r = estimate_all(draw.panel, draw.exposure,
                                          DistanceSource::from_network(draw.network), opt);
  int compared = 0;
  for (const auto& c : r.cells) {
    if (c.component != Component::kDIDBenchmark || !c.ci) continue;
    const ComponentEstimate* cs = r.find(Component::kCSBenchmark, c.g, c.l);
    REQUIRE(cs != nullptr);
    REQUIRE(cs->ci);
    CHECK(cs->value == c.value);
    CHECK(cs->ci->se != c.ci->se);
    ++compared;
  }
  CHECK(compared > 0);
}
