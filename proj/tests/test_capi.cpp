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


#include <string.h>

#include <string>

#include "doctest.h"
#include "temp_dir.hpp"
#include "spilldid/spilldid.h"

using spilldid::testing::TempDir;

TEST_CASE("C API: version and error reporting") {
  CHECK(strlen(sd_version()) > 0);
  sd_panel* panel = nullptr;
  CHECK(sd_panel_load("/nonexistent/panel.csv", nullptr, 0, &panel) == SD_ERR_VALIDATION);
  CHECK(panel == nullptr);
  CHECK(strstr(sd_last_error(), "panel not found") != nullptr);
  CHECK(sd_panel_save(nullptr, "x") == SD_ERR_VALIDATION);
}

TEST_CASE("C API: saved draw re-estimates to identical values") {
  TempDir dir;
  sd_simulate_options so;
  sd_simulate_options_default(&so);
  so.design = SD_DGP2;
  so.n_units = 200;
  so.seed = 11;
  sd_panel* panel = nullptr;
  sd_network* network = nullptr;
  REQUIRE(sd_simulate_draw(&so, 2, &panel, &network) == SD_OK);
  const std::string pp = dir.file("panel.csv"), np = dir.file("network.csv");
  REQUIRE(sd_panel_save(panel, pp.c_str()) == SD_OK);
  REQUIRE(sd_network_save(network, panel, np.c_str()) == SD_OK);

  sd_panel* loaded = nullptr;
  sd_network* loaded_net = nullptr;
  REQUIRE(sd_panel_load(pp.c_str(), nullptr, 0, &loaded) == SD_OK);
  CHECK(sd_panel_n_units(loaded) == 200);
  CHECK(sd_panel_n_periods(loaded) == 6);
  CHECK(sd_network_load("/nonexistent/net.csv", loaded, 0.0, 0, &loaded_net) ==
        SD_ERR_VALIDATION);
  CHECK(strstr(sd_last_error(), "network not found") != nullptr);
  REQUIRE(sd_network_load(np.c_str(), loaded, 0.0, 0, &loaded_net) == SD_OK);

  sd_exposure *e1 = nullptr, *e2 = nullptr;
  REQUIRE(sd_exposure_compute(panel, network, "three_state", nullptr, 0, &e1) == SD_OK);
  REQUIRE(sd_exposure_compute(loaded, loaded_net, "three_state", nullptr, 0, &e2) == SD_OK);
  sd_exposure* bad_exposure = e1;
  CHECK(sd_exposure_compute(panel, network, "quartic", nullptr, 0, &bad_exposure) ==
        SD_ERR_VALIDATION);
  CHECK(bad_exposure == nullptr);

  sd_estimate_options eo;
  sd_estimate_options_default(&eo);
  eo.first_stage = SD_FIRST_STAGE_DOSE;
  eo.band_draws = 200;
  sd_result *r1 = nullptr, *r2 = nullptr;
  const sd_status st = sd_estimate(panel, e1, network, &eo, &r1);
  INFO(std::string(sd_last_error()));
  REQUIRE(st == SD_OK);
  REQUIRE(sd_estimate(loaded, e2, loaded_net, &eo, &r2) == SD_OK);
  REQUIRE(sd_result_n_cells(r1) == sd_result_n_cells(r2));
  REQUIRE(sd_result_n_cells(r1) > 0);
  for (int k = 0; k < sd_result_n_cells(r1); ++k) {
    sd_cell_record a, b;
    REQUIRE(sd_result_cell(r1, k, &a) == SD_OK);
    REQUIRE(sd_result_cell(r2, k, &b) == SD_OK);
    CHECK(std::string(a.component) == b.component);
    CHECK(a.admissible == b.admissible);
    if (a.admissible) CHECK(a.value == b.value);
    CHECK(a.has_ci == b.has_ci);
    if (a.has_ci) CHECK(a.se == b.se);
  }
  for (int k = 0; k < sd_result_n_events(r1); ++k) {
    sd_event_record a, b;
    REQUIRE(sd_result_event(r1, k, &a) == SD_OK);
    REQUIRE(sd_result_event(r2, k, &b) == SD_OK);
    if (a.admissible) CHECK(a.value == b.value);
  }
  sd_cell_record bad;
  CHECK(sd_result_cell(r1, -1, &bad) == SD_ERR_VALIDATION);
  CHECK(sd_result_bandwidth(r1) == 6.0);
  CHECK(sd_result_write_estimates(r1, dir.file("est.csv").c_str()) == SD_OK);
  CHECK(sd_result_write_support(r1, dir.file("sup.csv").c_str()) == SD_OK);
  CHECK(sd_result_write_benchmark(r1, dir.file("bench.csv").c_str()) == SD_OK);
  CHECK(sd_result_write_estimates(r1, "/nonexistent/dir/est.csv") == SD_ERR_IO);

  sd_result_free(r1);
  sd_result_free(r2);
  sd_exposure_free(e1);
  sd_exposure_free(e2);
  sd_network_free(network);
  sd_network_free(loaded_net);
  sd_panel_free(panel);
  sd_panel_free(loaded);
}

TEST_CASE("C API: structured first stage without basis fails validation") {
  sd_simulate_options so;
  sd_simulate_options_default(&so);
  sd_panel* panel = nullptr;
  sd_network* network = nullptr;
  REQUIRE(sd_simulate_draw(&so, 0, &panel, &network) == SD_OK);
  sd_exposure* e = nullptr;
  REQUIRE(sd_exposure_compute(panel, network, "binary", nullptr, 0, &e) == SD_OK);
  sd_estimate_options eo;
  sd_estimate_options_default(&eo);
  eo.first_stage = SD_FIRST_STAGE_STRUCTURED;
  sd_result* r = nullptr;
  CHECK(sd_estimate(panel, e, network, &eo, &r) == SD_ERR_VALIDATION);
  CHECK(r == nullptr);
  eo.first_stage = SD_FIRST_STAGE_SATURATED;
  eo.alpha = 2.0;
  CHECK(sd_estimate(panel, e, network, &eo, &r) == SD_ERR_VALIDATION);
  sd_exposure_free(e);
  sd_network_free(network);
  sd_panel_free(panel);
}

TEST_CASE("C API: simulation report") {
  TempDir dir;
  sd_simulate_options so;
  sd_simulate_options_default(&so);
  so.replications = 0;
  sd_mc_report* rep = nullptr;
  CHECK(sd_simulate(&so, &rep) == SD_ERR_VALIDATION);
  so.replications = 20;
  so.keep_records = 1;
  REQUIRE(sd_simulate(&so, &rep) == SD_OK);
  sd_mc_row row;
  REQUIRE(sd_mc_report_row(rep, "Proposed DTE", "DTE", &row) == SD_OK);
  CHECK(row.n_records == 20 * 3);
  CHECK(sd_mc_report_row(rep, "Oracle", "DTE", &row) == SD_ERR_VALIDATION);
  const sd_mc_report* list[] = {rep};
  CHECK(sd_mc_write_summary(list, 1, dir.file("s.csv").c_str()) == SD_OK);
  CHECK(sd_mc_write_tables(list, 1, dir.file("t.txt").c_str()) == SD_OK);
  CHECK(sd_mc_write_records(rep, dir.file("r.csv").c_str()) == SD_OK);
  sd_mc_report_free(rep);
}
