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


#include <sstream>

#include "doctest.h"
#include "error.hpp"
#include "fixtures.hpp"
#include "panel.hpp"

using namespace spilldid;
using namespace spilldid::testing;

namespace {

std::string long_csv(int n_units, int n_periods, const std::vector<int>& cohorts,
                     bool with_weight) {
  std::ostringstream out;
  out << "unit,period,outcome,cohort" << (with_weight ? ",weight" : "") << "\n";
  for (int i = 1; i <= n_units; ++i) {
    for (int t = 1; t <= n_periods; ++t) {
      const int g = cohorts[i - 1];
      out << i << "," << t << "," << (0.5 * i + 0.25 * t) << ","
          << (g == kNeverTreated ? std::string("") : std::to_string(g));
      if (with_weight) out << "," << i;
      out << "\n";
    }
  }
  return out.str();
}

}  // namespace

TEST_CASE("load_panel without a weight column gives unit weights") {
  TempDir dir;
  const auto path = dir.write("p.csv", long_csv(4, 6, {3, 0, 4, 0}, false));
  const PanelDataset ds = load_panel(path);
  CHECK(ds.n_units == 4);
  CHECK(ds.n_periods == 6);
  CHECK(ds.weight == std::vector<double>{1, 1, 1, 1});
  CHECK(ds.y(2, 4) == doctest::Approx(0.5 * 3 + 0.25 * 4));
}

TEST_CASE("cohort column defines an absorbing treatment path") {
  TempDir dir;
  std::vector<int> cohorts(7, kNeverTreated);
  cohorts[6] = 3;
  const auto path = dir.write("p.csv", long_csv(7, 6, cohorts, true));
  const PanelDataset ds = load_panel(path);
  CHECK(ds.cohort[6] == 3);
  for (Period t = 1; t <= 6; ++t) CHECK(ds.treated(6, t) == (t >= 3));
  CHECK(ds.weight[6] == 7.0);
}

TEST_CASE("a missing unit-period is rejected as unbalanced") {
  TempDir dir;
  std::string text = long_csv(4, 6, {3, 0, 4, 0}, false);
  const std::string drop = "2,5,";
  const auto pos = text.find("\n" + drop);
  REQUIRE(pos != std::string::npos);
  text.erase(pos + 1, text.find('\n', pos + 1) - pos);
  const auto path = dir.write("p.csv", text);
  try {
    load_panel(path);
    FAIL("expected a validation error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kValidation);
    CHECK(std::string(e.what()).find("unbalanced panel") != std::string::npos);
  }
}

TEST_CASE("invalid cohorts and weights are rejected") {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(2, 4);
  PanelDataset ds = make_panel({1, kNeverTreated}, y);
  CHECK_FALSE(validate(ds).ok());
  ds = make_panel({2, kNeverTreated}, y, {1.0, 0.0});
  CHECK_FALSE(validate(ds).ok());
  ds = make_panel({2, kNeverTreated}, y);
  CHECK(validate(ds).ok());
}

TEST_CASE("long_difference subtracts the baseline outcome") {
  Eigen::MatrixXd y = Eigen::MatrixXd::Constant(2, 6, 7.0);
  y(0, 3) = 5.0;
  y(0, 1) = 3.0;
  const PanelDataset ds = make_panel({3, kNeverTreated}, y);
  const Eigen::VectorXd d = long_difference(ds, 4, 2);
  CHECK(d(0) == 2.0);
  CHECK(d(1) == 0.0);
  CHECK_THROWS_AS(long_difference(ds, 3, 3), Error);
}

TEST_CASE("baseline_period is g - delta - 1") {
  CHECK(baseline_period(3, 0) == 2);
  CHECK(baseline_period(5, 2) == 2);
  CHECK_THROWS_AS(baseline_period(2, 1), Error);
}

TEST_CASE("save_panel and load_panel round trip bitwise") {
  TempDir dir;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  Eigen::MatrixXd y(5, 4);
  for (int i = 0; i < 5; ++i) {
    for (int t = 0; t < 4; ++t) y(i, t) = z(rng);
  }
  const PanelDataset ds = make_panel({2, 3, kNeverTreated, 4, kNeverTreated}, y,
                                     {1.5, 0.25, 2.0, 1.0, 3.0});
  save_panel(ds, dir.file("p.csv"));
  const PanelDataset back = load_panel(dir.file("p.csv"));
  CHECK(back.unit_ids == ds.unit_ids);
  CHECK(back.cohort == ds.cohort);
  CHECK(back.weight == ds.weight);
  CHECK((back.outcome.array() == ds.outcome.array()).all());
}
