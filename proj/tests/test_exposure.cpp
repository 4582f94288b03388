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


#include <set>

#include "doctest.h"
#include "fixtures.hpp"

using namespace spilldid;
using namespace spilldid::testing;

TEST_CASE("no adopters means zero raw exposure") {
  const PanelDataset ds = make_panel(std::vector<int>(5, kNeverTreated), Eigen::MatrixXd::Zero(5, 4));
  const NetworkSpec net = line_network(5);
  const Eigen::MatrixXd raw = raw_exposure(ds, net, ExposureConfig::three_state());
  CHECK(raw.isZero(0.0));
  const ExposurePath e = build_exposure(ds, net, ExposureConfig::three_state());
  CHECK((e.state.array() == 0).all());
}

TEST_CASE("interior line unit with both neighbors adopted has raw exposure 1") {
  std::vector<int> cohorts{kNeverTreated, 3, kNeverTreated, 4, kNeverTreated};
  const PanelDataset ds = make_panel(cohorts, Eigen::MatrixXd::Zero(5, 5));
  const NetworkSpec net = line_network(5);
  CHECK(net.weights(2, 1) == 0.5);
  CHECK(net.weights(2, 3) == 0.5);
  const Eigen::MatrixXd raw = raw_exposure(ds, net, ExposureConfig::three_state());
  CHECK(raw(2, 1) == 0.0);  // period 2
  CHECK(raw(2, 2) == 0.5);  // period 3
  CHECK(raw(2, 3) == 1.0);  // period 4
  CHECK(raw(2, 4) == 1.0);
}

TEST_CASE("distance cutoff exposure counts adopters within the radius") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 200.0);
  std::uniform_int_distribution<int> pick(0, 4);
  const int n = 40, periods = 6;
  Eigen::MatrixXd xy(n, 2);
  std::vector<int> cohorts(n);
  const int choices[] = {kNeverTreated, 2, 3, 4, 6};
  for (int i = 0; i < n; ++i) {
    xy(i, 0) = u(rng);
    xy(i, 1) = u(rng);
    cohorts[i] = choices[pick(rng)];
  }
  Eigen::MatrixXd d(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) d(i, j) = (xy.row(i) - xy.row(j)).norm();
  }
  const PanelDataset ds = make_panel(cohorts, Eigen::MatrixXd::Zero(n, periods));
  const NetworkSpec net = network_from_distances(d, 50.0);
  const Eigen::MatrixXd raw = raw_exposure(ds, net, ExposureConfig::binary());
  for (int i = 0; i < n; ++i) {
    for (int t = 1; t <= periods; ++t) {
      int count = 0;
      for (int j = 0; j < n; ++j) {
        if (j != i && d(i, j) <= 50.0 && cohorts[j] != kNeverTreated && cohorts[j] <= t) ++count;
      }
      CHECK(raw(i, t - 1) == count);
    }
  }
}

TEST_CASE("three adopters within the cutoff give a raw count of 3") {
  Eigen::MatrixXd d(5, 5);
  d << 0, 10, 20, 45, 80,  //
      10, 0, 10, 35, 70,   //
      20, 10, 0, 25, 60,   //
      45, 35, 25, 0, 35,   //
      80, 70, 60, 35, 0;
  const PanelDataset ds = make_panel({kNeverTreated, 2, 2, 3, 2}, Eigen::MatrixXd::Zero(5, 3));
  const NetworkSpec net = network_from_distances(d, 50.0);
  const Eigen::MatrixXd raw = raw_exposure(ds, net, ExposureConfig::binary());
  CHECK(raw(0, 2) == 3.0);
  const Eigen::MatrixXi state = coarsen(raw, ExposureConfig::binary());
  CHECK(state(0, 2) == 1);
}

TEST_CASE("three-state coarsening and doses") {
  const ExposureConfig cfg = ExposureConfig::three_state();
  Eigen::MatrixXd raw(1, 4);
  raw << 0.0, 0.5, 0.7, 1.0;
  const Eigen::MatrixXi s = coarsen(raw, cfg);
  const auto labels = cfg.labels();
  CHECK(labels[s(0, 0)] == "0");
  CHECK(labels[s(0, 1)] == "low");
  CHECK(labels[s(0, 2)] == "high");
  CHECK(labels[s(0, 3)] == "high");
  CHECK(dose("0", cfg) == 0.0);
  CHECK(dose("low", cfg) == 1.0);
  CHECK(dose("high", cfg) == 2.0);
}

TEST_CASE("binary coarsening yields only 0 and positive") {
  const ExposureConfig cfg = ExposureConfig::binary();
  const auto labels = cfg.labels();
  CHECK(labels == std::vector<std::string>{"0", "positive"});
  Eigen::MatrixXd raw(1, 3);
  raw << 0.0, 1.0, 4.0;
  const Eigen::MatrixXi s = coarsen(raw, cfg);
  CHECK(s(0, 0) == 0);
  CHECK(s(0, 1) == 1);
  CHECK(s(0, 2) == 1);
}

TEST_CASE("two_date_state pairs the target and baseline periods") {
  Eigen::MatrixXi state = Eigen::MatrixXi::Zero(2, 5);
  state(0, 3) = 2;  // unit 0 high at period 4
  state(0, 2) = 1;
  const ExposurePath e = make_exposure(state);
  auto pairs = two_date_state(e, 5, 3, 1, 0);
  CHECK(e.label(pairs[0].first) == "high");
  CHECK(e.label(pairs[0].second) == "0");
  CHECK(pairs[1] == std::pair<int, int>{0, 0});
  // delta = 1, g = 4, l = 0 uses periods 4 and 2.
  state(0, 1) = 1;
  const ExposurePath e2 = make_exposure(state);
  pairs = two_date_state(e2, 5, 4, 0, 1);
  CHECK(pairs[0] == std::pair<int, int>{2, 1});
}

TEST_CASE("temporal kernel weights adopters by lag") {
  const PanelDataset ds = make_panel({kNeverTreated, 2}, Eigen::MatrixXd::Zero(2, 5));
  const NetworkSpec net = line_network(2);
  ExposureConfig cfg = ExposureConfig::three_state();
  cfg.kernel = {0.25, 0.5, 1.0};
  const Eigen::MatrixXd raw = raw_exposure(ds, net, cfg);
  CHECK(raw(0, 0) == 0.0);
  CHECK(raw(0, 1) == 0.25);
  CHECK(raw(0, 2) == 0.5);
  CHECK(raw(0, 3) == 1.0);
  CHECK(raw(0, 4) == 1.0);
}
