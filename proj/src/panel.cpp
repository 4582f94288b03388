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

#include "panel.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "error.hpp"

namespace spilldid {

namespace {

bool is_never_token(const std::string& s) {
  if (s.empty()) return true;
  std::string lower;
  for (char c : s) lower.push_back(static_cast<char>(std::tolower(c)));
  return lower == "never" || lower == "inf" || lower == "na" || lower == "none";
}

bool truthy(const std::string& s) {
  std::string lower;
  for (char c : s) lower.push_back(static_cast<char>(std::tolower(c)));
  return lower == "1" || lower == "true" || lower == "yes";
}

// Sorts labels numerically when every label parses as a number.
std::vector<std::string> sorted_labels(const std::set<std::string>& labels,
                                       bool* all_numeric = nullptr) {
  std::vector<std::string> out(labels.begin(), labels.end());
  bool numeric = true;
  for (const auto& s : out) {
    double v;
    if (!csv::parse_double(s, v)) {
      numeric = false;
      break;
    }
  }
  if (numeric) {
    std::stable_sort(out.begin(), out.end(),
                     [](const std::string& a, const std::string& b) {
                       double x = 0, y = 0;
                       csv::parse_double(a, x);
                       csv::parse_double(b, y);
                       return x < y;
                     });
  }
  if (all_numeric) *all_numeric = numeric;
  return out;
}

template <typename T>
void set_unit_attr(std::vector<std::optional<T>>& slot, int unit, const T& value,
                   const std::string& what, const std::string& unit_id) {
  if (!slot[unit]) {
    slot[unit] = value;
  } else if (!(*slot[unit] == value)) {
    throw validation_error(what + " varies over time for unit '" + unit_id +
                           "'");
  }
}

}  // namespace

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (const auto& e : errors) {
    os << e.code;
    if (!e.unit.empty()) os << " (unit " << e.unit;
    if (e.period) os << (e.unit.empty() ? " (" : ", ") << "period " << *e.period;
    if (!e.unit.empty() || e.period) os << ")";
    os << ": " << e.message << "\n";
  }
  return os.str();
}

std::vector<int> PanelDataset::target_cohorts() const {
  std::set<int> gs;
  for (int i = 0; i < n_units; ++i) {
    if (!never_treated(i) && !exposure_only[i]) gs.insert(cohort[i]);
  }
  return {gs.begin(), gs.end()};
}

ValidationReport validate(const PanelDataset& ds) {
  ValidationReport report;
  auto err = [&](std::string code, int unit, std::optional<Period> t,
                 std::string msg) {
    report.errors.push_back({std::move(code),
                             unit >= 0 && unit < static_cast<int>(ds.unit_ids.size())
                                 ? ds.unit_ids[unit]
                                 : std::string(),
                             t, std::move(msg)});
  };
  if (ds.n_units <= 0) err("empty_panel", -1, std::nullopt, "no units");
  if (ds.n_periods <= 0) err("empty_panel", -1, std::nullopt, "no periods");
  if (ds.outcome.rows() != ds.n_units || ds.outcome.cols() != ds.n_periods) {
    err("unbalanced", -1, std::nullopt, "unbalanced panel");
    return report;
  }
  const auto n = static_cast<std::size_t>(ds.n_units);
  if (ds.cohort.size() != n || ds.weight.size() != n || ds.stratum.size() != n ||
      ds.exposure_only.size() != n || ds.unit_ids.size() != n) {
    err("shape", -1, std::nullopt, "per-unit vectors have inconsistent length");
    return report;
  }
  if (ds.basis.cols() > 0 && ds.basis.rows() != ds.n_units) {
    err("shape", -1, std::nullopt, "basis rows differ from unit count");
  }
  if (ds.anticipation < 0) {
    err("anticipation", -1, std::nullopt, "anticipation must be nonnegative");
  }
  for (int i = 0; i < ds.n_units; ++i) {
    for (int t = 1; t <= ds.n_periods; ++t) {
      if (!std::isfinite(ds.y(i, t))) err("outcome", i, t, "non-finite outcome");
    }
    if (!(ds.weight[i] > 0.0) || !std::isfinite(ds.weight[i])) {
      err("weight", i, std::nullopt, "analysis weight must be positive");
    }
    const int g = ds.cohort[i];
    if (g != kNeverTreated && (g < 2 || g > ds.n_periods)) {
      err("cohort", i, std::nullopt,
          "cohort must be never or in 2..T (no unit treated at t=1)");
    }
    if (ds.stratum[i] < 0 || ds.stratum[i] >= ds.n_strata()) {
      err("stratum", i, std::nullopt, "stratum index out of range");
    }
  }
  return report;
}

void require_valid(const PanelDataset& ds) {
  auto report = validate(ds);
  if (!report.ok()) throw validation_error(report.summary());
}

PanelDataset load_panel(const std::string& path, const PanelSchema& schema) {
  const csv::Table table = csv::read(path);
  auto need = [&](const std::string& name) {
    int c = table.column(name);
    if (c < 0) throw validation_error("panel: missing column '" + name + "'");
    return c;
  };
  const int c_unit = need(schema.unit);
  const int c_period = need(schema.period);
  const int c_outcome = need(schema.outcome);
  const int c_cohort = need(schema.cohort);
  const int c_weight = table.column(schema.weight);
  const int c_stratum = table.column(schema.stratum);
  const int c_expo = table.column(schema.exposure_only);

  std::vector<int> c_basis;
  std::vector<std::string> basis_names;
  if (!schema.basis.empty()) {
    for (const auto& b : schema.basis) {
      c_basis.push_back(need(b));
      basis_names.push_back(b);
    }
  } else {
    for (int k = 1;; ++k) {
      const std::string name = "v" + std::to_string(k);
      const int c = table.column(name);
      if (c < 0) break;
      c_basis.push_back(c);
      basis_names.push_back(name);
    }
  }

  std::set<std::string> unit_set, period_set, stratum_set;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.size() != table.header.size()) {
      throw validation_error("panel: row " + std::to_string(r + 2) + " has " +
                             std::to_string(row.size()) + " fields, expected " +
                             std::to_string(table.header.size()));
    }
    unit_set.insert(row[c_unit]);
    period_set.insert(row[c_period]);
    if (c_stratum >= 0) stratum_set.insert(row[c_stratum]);
  }
  if (unit_set.empty()) throw validation_error("panel: no data rows");

  PanelDataset ds;
  ds.unit_ids = sorted_labels(unit_set);
  bool periods_numeric = false;
  ds.period_labels = sorted_labels(period_set, &periods_numeric);
  ds.n_units = static_cast<int>(ds.unit_ids.size());
  ds.n_periods = static_cast<int>(ds.period_labels.size());
  if (c_stratum >= 0) {
    ds.stratum_labels = sorted_labels(stratum_set);
  } else {
    ds.stratum_labels = {"all"};
  }

  std::map<std::string, int> unit_index, period_index, stratum_index;
  for (int i = 0; i < ds.n_units; ++i) unit_index[ds.unit_ids[i]] = i;
  for (int t = 0; t < ds.n_periods; ++t) period_index[ds.period_labels[t]] = t + 1;
  for (int s = 0; s < ds.n_strata(); ++s) stratum_index[ds.stratum_labels[s]] = s;

  std::vector<double> period_values(ds.n_periods, 0.0);
  if (periods_numeric) {
    for (int t = 0; t < ds.n_periods; ++t) {
      csv::parse_double(ds.period_labels[t], period_values[t]);
    }
  }

  // Maps a cohort field to a period index; calendar values between sample
  // periods round up to the next observed period.
  auto cohort_of = [&](const std::string& field, const std::string& unit_id) {
    if (is_never_token(field)) return kNeverTreated;
    if (auto it = period_index.find(field); it != period_index.end()) {
      if (it->second == 1) {
        throw validation_error("panel: unit '" + unit_id +
                               "' is treated in the first period");
      }
      return it->second;
    }
    double v;
    if (!periods_numeric || !csv::parse_double(field, v)) {
      throw validation_error("panel: unrecognized cohort '" + field +
                             "' for unit '" + unit_id + "'");
    }
    if (v > period_values.back()) return kNeverTreated;
    if (v <= period_values.front()) {
      throw validation_error("panel: unit '" + unit_id +
                             "' is treated in the first period");
    }
    for (int t = 0; t < ds.n_periods; ++t) {
      if (period_values[t] >= v) return t + 1;
    }
    return kNeverTreated;
  };

  ds.outcome = Eigen::MatrixXd::Constant(ds.n_units, ds.n_periods,
                                         std::numeric_limits<double>::quiet_NaN());
  std::vector<std::vector<bool>> seen(ds.n_units,
                                      std::vector<bool>(ds.n_periods, false));
  std::vector<std::optional<int>> cohort(ds.n_units), stratum(ds.n_units);
  std::vector<std::optional<double>> weight(ds.n_units);
  std::vector<std::optional<bool>> expo(ds.n_units);
  std::vector<std::vector<std::optional<double>>> basis(
      c_basis.size(), std::vector<std::optional<double>>(ds.n_units));

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string& uid = row[c_unit];
    const int i = unit_index[uid];
    const int t = period_index[row[c_period]];
    if (seen[i][t - 1]) {
      throw validation_error("panel: duplicate (unit, period) row for unit '" +
                             uid + "', period '" + row[c_period] + "'");
    }
    seen[i][t - 1] = true;
    double y;
    if (!csv::parse_double(row[c_outcome], y)) {
      throw validation_error("panel: non-numeric outcome '" + row[c_outcome] +
                             "' at row " + std::to_string(r + 2));
    }
    ds.outcome(i, t - 1) = y;
    set_unit_attr(cohort, i, cohort_of(row[c_cohort], uid), "cohort", uid);
    if (c_weight >= 0) {
      double w;
      if (!csv::parse_double(row[c_weight], w)) {
        throw validation_error("panel: non-numeric weight for unit '" + uid + "'");
      }
      set_unit_attr(weight, i, w, "weight", uid);
    }
    if (c_stratum >= 0) {
      set_unit_attr(stratum, i, stratum_index[row[c_stratum]], "stratum", uid);
    }
    if (c_expo >= 0) set_unit_attr(expo, i, truthy(row[c_expo]), "exposure_only", uid);
    for (std::size_t k = 0; k < c_basis.size(); ++k) {
      double v;
      if (!csv::parse_double(row[c_basis[k]], v)) {
        throw validation_error("panel: non-numeric basis value in column '" +
                               basis_names[k] + "'");
      }
      set_unit_attr(basis[k], i, v, basis_names[k], uid);
    }
  }

  for (int i = 0; i < ds.n_units; ++i) {
    for (int t = 0; t < ds.n_periods; ++t) {
      if (!seen[i][t]) {
        throw validation_error("unbalanced panel: unit '" + ds.unit_ids[i] +
                               "' has no row for period '" +
                               ds.period_labels[t] + "'");
      }
    }
  }

  ds.cohort.resize(ds.n_units);
  ds.weight.resize(ds.n_units);
  ds.stratum.resize(ds.n_units);
  ds.exposure_only.resize(ds.n_units);
  ds.basis.resize(ds.n_units, static_cast<Eigen::Index>(c_basis.size()));
  ds.basis_names = basis_names;
  for (int i = 0; i < ds.n_units; ++i) {
    ds.cohort[i] = *cohort[i];
    ds.weight[i] = weight[i].value_or(1.0);
    ds.stratum[i] = stratum[i].value_or(0);
    ds.exposure_only[i] = expo[i].value_or(false);
    for (std::size_t k = 0; k < c_basis.size(); ++k) ds.basis(i, k) = *basis[k][i];
  }
  require_valid(ds);
  return ds;
}

void save_panel(const PanelDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write '" + path + "'");
  const bool strata = ds.n_strata() > 1;
  const bool expo = std::any_of(ds.exposure_only.begin(), ds.exposure_only.end(),
                                [](bool b) { return b; });
  out << "unit,period,outcome,cohort,weight";
  if (strata) out << ",stratum";
  if (expo) out << ",exposure_only";
  for (const auto& b : ds.basis_names) out << "," << csv::quote_if_needed(b);
  out << "\n";
  for (int i = 0; i < ds.n_units; ++i) {
    const std::string cohort = ds.never_treated(i)
                                   ? std::string("never")
                                   : ds.period_labels[ds.cohort[i] - 1];
    for (int t = 1; t <= ds.n_periods; ++t) {
      out << csv::quote_if_needed(ds.unit_ids[i]) << ","
          << csv::quote_if_needed(ds.period_labels[t - 1]) << ","
          << csv::format_double(ds.y(i, t)) << "," << cohort << ","
          << csv::format_double(ds.weight[i]);
      if (strata) out << "," << csv::quote_if_needed(ds.stratum_labels[ds.stratum[i]]);
      if (expo) out << "," << (ds.exposure_only[i] ? 1 : 0);
      for (Eigen::Index k = 0; k < ds.basis.cols(); ++k) {
        out << "," << csv::format_double(ds.basis(i, k));
      }
      out << "\n";
    }
  }
  if (!out) throw io_error("write failed for '" + path + "'");
}

Eigen::VectorXd long_difference(const PanelDataset& ds, Period t, Period t0) {
  if (t0 < 1 || t > ds.n_periods || t0 >= t) {
    throw validation_error("long_difference: need 1 <= t0 < t <= T (got t=" +
                           std::to_string(t) + ", t0=" + std::to_string(t0) + ")");
  }
  return ds.outcome.col(t - 1) - ds.outcome.col(t0 - 1);
}

Period baseline_period(int cohort, int anticipation) {
  if (cohort == kNeverTreated) {
    throw validation_error("baseline_period: never-treated units have no baseline");
  }
  const Period t0 = cohort - anticipation - 1;
  if (t0 < 1) {
    throw validation_error("baseline period " + std::to_string(t0) +
                           " precedes the first period (g=" + std::to_string(cohort) +
                           ", delta=" + std::to_string(anticipation) + ")");
  }
  return t0;
}

}  // namespace spilldid
