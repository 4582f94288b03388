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


#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "error.hpp"

namespace spilldid {

namespace {

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : path_(path), out_(path) {
    if (!out_) throw io_error("cannot write '" + path + "'");
  }
  ~CsvWriter() = default;

  void row(const std::vector<std::string>& fields) {
    for (std::size_t k = 0; k < fields.size(); ++k) {
      if (k) out_ << ',';
      out_ << csv::quote_if_needed(fields[k]);
    }
    out_ << '\n';
    if (!out_) throw io_error("write failed for '" + path_ + "'");
  }

 private:
  std::string path_;
  std::ofstream out_;
};

std::string num(double v) { return csv::format_double(v); }
std::string num(int v) { return std::to_string(v); }
std::string flag(bool b) { return b ? "1" : "0"; }

std::vector<std::string> interval_fields(const std::optional<Interval>& ci) {
  if (!ci) return {"NA", "NA", "NA"};
  return {num(ci->se), num(ci->lo), num(ci->hi)};
}

std::vector<std::string> band_fields(const std::optional<Interval>& band) {
  if (!band) return {"NA", "NA"};
  return {num(band->lo), num(band->hi)};
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k) out += ';';
    if constexpr (std::is_same_v<T, double>) out += num(values[k]);
    else out += std::to_string(values[k]);
  }
  return out;
}

std::string cohort_text(int g) { return g == kNeverTreated ? "never" : std::to_string(g); }

void append(std::vector<std::string>& a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
}

}  // namespace

void write_estimates_csv(const EstimationResult& result, const std::string& path) {
  CsvWriter out(path);
  out.row({"level", "component", "g", "l", "t", "value", "admissible", "note", "n_target",
           "target_mass_retained", "se", "ci_lo", "ci_hi", "band_lo", "band_hi", "cohorts",
           "weights"});
  for (const auto& e : result.cells) {
    std::vector<std::string> r{"cell",
                               std::string(component_name(e.component)),
                               cohort_text(e.g),
                               e.component == Component::kCSENeverTreated ? "NA" : num(e.l),
                               num(e.t),
                               num(e.value),
                               flag(e.admissible),
                               e.note,
                               num(e.n_target),
                               num(e.target_mass_retained)};
    append(r, interval_fields(e.ci));
    append(r, {"NA", "NA", "", ""});
    out.row(r);
  }
  for (const auto& e : result.event_time) {
    std::vector<std::string> r{"event", std::string(component_name(e.component)), "NA",
                               num(e.l), "NA", num(e.value), flag(e.admissible), e.note,
                               "NA", "NA"};
    append(r, interval_fields(e.ci));
    append(r, band_fields(e.band));
    append(r, {join(e.cohorts), join(e.weights)});
    out.row(r);
  }
}

void write_support_csv(const EstimationResult& result, const PanelDataset& ds,
                       const ExposurePath& exposure, const std::string& path) {
  CsvWriter out(path);
  out.row({"g", "l", "t", "t0", "stratum", "state_t", "state_t0", "n_target", "n_source",
           "w_target", "w_source", "retained", "target_mass_retained", "all_mass_retained",
           "min_cell"});
  for (const auto& s : result.supports) {
    auto emit = [&](const SupportCell& c, bool retained) {
      out.row({num(s.g), num(s.l), num(s.t), num(s.t0), ds.stratum_labels.at(c.key.stratum),
               exposure.label(c.key.state_t), exposure.label(c.key.state_t0),
               num(c.n_target), num(c.n_source), num(c.w_target), num(c.w_source),
               flag(retained), num(s.target_mass_retained), flag(s.all_mass_retained),
               num(s.min_cell)});
    };
    std::vector<std::pair<SupportCell, bool>> rows;
    for (const auto& c : s.cells) rows.push_back({c, true});
    for (const auto& c : s.dropped) rows.push_back({c, false});
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return a.first.key < b.first.key; });
    for (const auto& [c, retained] : rows) emit(c, retained);
  }
}

void write_benchmark_csv(const EstimationResult& result, const std::string& path) {
  CsvWriter out(path);
  out.row({"level", "g", "l", "did", "did_se", "did_ci_lo", "did_ci_hi", "cs", "cs_se",
           "cs_ci_lo", "cs_ci_hi", "dte", "dte_admissible", "gap_did_minus_dte", "cohorts"});
  std::set<std::pair<int, int>> keys;
  for (const auto& e : result.cells) {
    if (e.component == Component::kDIDBenchmark) keys.insert({e.g, e.l});
  }
  for (const auto& [g, l] : keys) {
    const auto* did = result.find(Component::kDIDBenchmark, g, l);
    const auto* cs = result.find(Component::kCSBenchmark, g, l);
    const auto* dte = result.find(Component::kDTE, g, l);
    std::vector<std::string> r{"cell", num(g), num(l), num(did->value)};
    append(r, interval_fields(did->ci));
    r.push_back(cs ? num(cs->value) : "NA");
    append(r, interval_fields(cs ? cs->ci : std::nullopt));
    const bool ok = dte && dte->admissible;
    append(r, {ok ? num(dte->value) : "NA", flag(ok),
               ok ? num(did->value - dte->value) : "NA", ""});
    out.row(r);
  }
  std::set<int> ls;
  for (const auto& e : result.event_time) ls.insert(e.l);
  for (int l : ls) {
    const auto* did = result.find_event(Component::kDIDBenchmark, l);
    if (!did) continue;
    const auto* cs = result.find_event(Component::kCSBenchmark, l);
    const auto* dte = result.find_event(Component::kDTE, l);
    std::vector<std::string> r{"event", "NA", num(l),
                               did->admissible ? num(did->value) : "NA"};
    append(r, interval_fields(did->ci));
    r.push_back(cs && cs->admissible ? num(cs->value) : "NA");
    append(r, interval_fields(cs ? cs->ci : std::nullopt));
    const bool ok = dte && dte->admissible && did->admissible;
    append(r, {ok ? num(dte->value) : "NA", flag(dte && dte->admissible),
               ok ? num(did->value - dte->value) : "NA", join(did->cohorts)});
    out.row(r);
  }
}

void write_exposure_csv(const PanelDataset& ds, const ExposurePath& exposure,
                        const std::string& path) {
  CsvWriter out(path);
  out.row({"unit", "period", "raw", "state", "dose"});
  for (int i = 0; i < ds.n_units; ++i) {
    for (Period t = 1; t <= ds.n_periods; ++t) {
      const int s = exposure.at(i, t);
      out.row({ds.unit_ids[i], ds.period_labels[t - 1], num(exposure.raw(i, t - 1)),
               exposure.label(s), num(exposure.doses.at(s))});
    }
  }
}

void write_network_csv(const PanelDataset& ds, const NetworkSpec& net, const std::string& path) {
  if (net.size() != ds.n_units) throw validation_error("network size does not match the panel");
  CsvWriter out(path);
  out.row({"i", "j", "weight"});
  for (int i = 0; i < net.size(); ++i) {
    for (int j = 0; j < net.size(); ++j) {
      if (net.weights(i, j) != 0.0) {
        out.row({ds.unit_ids[i], ds.unit_ids[j], num(net.weights(i, j))});
      }
    }
  }
}

void write_mc_csv(const std::vector<McReport>& reports, const std::string& path) {
  CsvWriter out(path);
  out.row({"design", "n", "method", "target", "bias", "rmse", "coverage", "availability",
           "n_available", "n_with_ci", "n_records", "replications", "failures", "seed"});
  for (const auto& rep : reports) {
    for (const auto& r : rep.rows) {
      out.row({design_name(rep.config.design), num(rep.config.n_units), r.method, r.target,
               num(r.bias), num(r.rmse), num(r.coverage), num(r.availability),
               num(r.n_available), num(r.n_with_ci), num(r.n_records), num(rep.replications),
               num(rep.failures), std::to_string(rep.config.seed)});
    }
  }
}

void write_mc_records_csv(const McReport& report, const std::string& path) {
  CsvWriter out(path);
  out.row({"design", "n", "replication", "l", "estimator", "available", "value", "truth",
           "truth_dse", "ci_lo", "ci_hi"});
  for (const auto& r : report.records) {
    const bool a = r.available;
    out.row({design_name(report.config.design), num(report.config.n_units),
             num(r.replication), num(r.l), mc_estimator_name(r.estimator), flag(a),
             a ? num(r.value) : "NA", a ? num(r.truth) : "NA", a ? num(r.truth_dse) : "NA",
             a && r.has_ci ? num(r.ci_lo) : "NA", a && r.has_ci ? num(r.ci_hi) : "NA"});
  }
}

namespace {

std::string fixed3(double v) {
  if (std::isnan(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s = buf;
  if (s == "-0.000") s = "0.000";
  return s;
}

std::string pad(const std::string& s, std::size_t width, bool left = true) {
  if (s.size() >= width) return s;
  return left ? s + std::string(width - s.size(), ' ') : std::string(width - s.size(), ' ') + s;
}

void table(std::ostringstream& out, const std::string& title,
           const std::vector<McReport>& reports,
           const std::vector<std::pair<std::string, std::string>>& methods) {
  std::vector<int> sizes;
  std::vector<Design> designs;
  for (const auto& r : reports) {
    if (std::find(sizes.begin(), sizes.end(), r.config.n_units) == sizes.end()) {
      sizes.push_back(r.config.n_units);
    }
    if (std::find(designs.begin(), designs.end(), r.config.design) == designs.end()) {
      designs.push_back(r.config.design);
    }
  }
  std::sort(sizes.begin(), sizes.end());
  std::sort(designs.begin(), designs.end());
  out << title << "\n";
  std::string head = pad("DGP", 6) + pad("Method", 24);
  std::string sub = pad("", 30);
  for (int n : sizes) {
    head += pad("N=" + std::to_string(n), 27);
    sub += pad("Bias", 9, false) + pad("RMSE", 9, false) + pad("Coverage", 9, false);
  }
  out << head << "\n" << sub << "\n";
  for (Design d : designs) {
    bool first = true;
    for (const auto& [method, target] : methods) {
      std::string line = pad(first ? design_name(d) : "", 6) + pad(method, 24);
      first = false;
      for (int n : sizes) {
        const McRow* row = nullptr;
        for (const auto& r : reports) {
          if (r.config.design == d && r.config.n_units == n) row = r.row(method, target);
        }
        if (row) {
          line += pad(fixed3(row->bias), 9, false) + pad(fixed3(row->rmse), 9, false) +
                  pad(fixed3(row->coverage), 9, false);
        } else {
          line += pad("", 27);
        }
      }
      out << line << "\n";
    }
  }
}

}  // namespace

std::string format_mc_tables(const std::vector<McReport>& reports) {
  std::ostringstream out;
  table(out, "Spillover-ignorant benchmark deviations from the dynamic total-effect target",
        reports, {{"Standard DID", "DTE"}, {"Callaway and Sant'Anna", "DTE"}});
  out << "\n";
  table(out, "Finite-sample performance of the proposed DSE, CSE, and DTE estimators",
        reports, {{"Proposed DSE", "DSE"}, {"Proposed CSE", "CSE"}, {"Proposed DTE", "DTE"}});
  out << "\nAvailability (share of replication x event-time records reported)\n";
  for (const auto& r : reports) {
    const McRow* row = r.row("Proposed DTE", "DTE");
    out << pad(design_name(r.config.design), 6) << pad("N=" + std::to_string(r.config.n_units), 8)
        << fixed3(row ? row->availability : std::nan("")) << "  failures " << r.failures
        << "\n";
  }
  return out.str();
}

}  // namespace spilldid
