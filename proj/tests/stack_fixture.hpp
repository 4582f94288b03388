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


#pragma once

#include <set>
#include <utility>
#include <vector>

#include "estimators.hpp"
#include "first_stage.hpp"
#include "inference.hpp"
#include "simulate.hpp"

namespace spilldid::testing {

struct Built {
  DgpDraw draw;
  FirstStageFit fit;
  StackInput input;
  std::vector<std::pair<int, int>> dse_keys;  // (g, l) per contrast
  std::vector<std::pair<int, int>> cse_keys;  // (g, l) per cohort spillover
};

// Every admissible DSE, CSE and never-treated CSE of a DGP draw, stacked.
inline Built build_stack(Design design, int n, FirstStageKind kind, std::uint64_t seed = 3,
                         int replication = 0) {
  Built b;
  b.draw = generate_dgp(DgpConfig::make(design, n, seed), replication);
  PanelDataset& ds = b.draw.panel;
  if (kind == FirstStageKind::kStructured) {
    ds.basis = b.draw.po.x;
    ds.basis_names = {"v1"};
  }
  const ExposurePath& e = b.draw.exposure;
  if (kind == FirstStageKind::kSaturated) b.fit = fit_cse_saturated(ds, e, 5);
  if (kind == FirstStageKind::kStructured) b.fit = fit_cse_structured(ds, e, 5, 3);
  if (kind == FirstStageKind::kDose) b.fit = fit_cse_dose(ds, e, 5);
  b.input.fit = &b.fit;
  std::set<int> shares;
  for (int g : ds.target_cohorts()) {
    for (int l = 0; g + l <= ds.n_periods && l <= 2; ++l) {
      const RetainedSupport s = dse_support(ds, e, g, l, 5);
      const ComponentEstimate dse = estimate_dse(ds, e, s);
      if (dse.admissible) {
        b.input.contrasts.push_back(dse_contrast(ds, e, s));
        b.input.contrast_values.push_back(dse.value);
        b.dse_keys.push_back({g, l});
        shares.insert(g);
      }
      const ComponentEstimate cse = estimate_cse(b.fit, ds, e, g, l);
      if (cse.admissible) {
        b.input.spillovers.push_back({g, l, g + l});
        b.input.spillover_values.push_back(cse.value);
        b.cse_keys.push_back({g, l});
      }
    }
  }
  for (Period t = 1; t <= ds.n_periods; ++t) {
    const ComponentEstimate c = estimate_cse_never_treated(b.fit, ds, e, t);
    if (c.admissible) {
      b.input.spillovers.push_back({kNeverTreated, 0, t});
      b.input.spillover_values.push_back(c.value);
    }
  }
  b.input.share_cohorts.assign(shares.begin(), shares.end());
  return b;
}

}  // namespace spilldid::testing
