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


/* The public header must compile as C. */
#include "spilldid/spilldid.h"

#include <stdio.h>
#include <string.h>

int main(void) {
  sd_estimate_options eo;
  sd_simulate_options so;
  sd_panel* panel = NULL;
  sd_estimate_options_default(&eo);
  sd_simulate_options_default(&so);
  if (eo.min_cell != 5 || eo.first_stage != SD_FIRST_STAGE_SATURATED) return 1;
  if (so.first_stage != SD_FIRST_STAGE_DOSE || so.replications != 1000) return 1;
  if (sd_panel_load("/nonexistent.csv", NULL, 0, &panel) != SD_ERR_VALIDATION) return 1;
  if (strlen(sd_last_error()) == 0) return 1;
  printf("spilldid %s\n", sd_version());
  return 0;
}
