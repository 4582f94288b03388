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


// Command-line front end. Links only the C API.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "spilldid/spilldid.h"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitInference = 3;
constexpr int kExitIo = 4;
constexpr int kExitInternal = 5;

struct CliError {
  int code;
  std::string message;
};

[[noreturn]] void fail(int code, const std::string& message) { throw CliError{code, message}; }

void check(sd_status status) {
  if (status != SD_OK) fail(static_cast<int>(status), sd_last_error());
}

// TOML sections become dotted option names ([inference] kernel -> inference.kernel).
// A JSON file is read from its "config" object so a run.json reruns directly.
class SectionedConfig : public CLI::ConfigTOML {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::string text{std::istreambuf_iterator<char>(input), std::istreambuf_iterator<char>()};
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') return from_json(text);
    std::istringstream in(text);
    std::vector<CLI::ConfigItem> out;
    for (auto item : CLI::ConfigTOML::from_config(in)) {
      if (item.name == "++" || item.name == "--") continue;
      item.name = item.fullname();
      item.parents.clear();
      out.push_back(std::move(item));
    }
    return out;
  }

 private:
  static std::string scalar(const ordered_json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static std::vector<CLI::ConfigItem> from_json(const std::string& text) {
    ordered_json doc;
    try {
      doc = ordered_json::parse(text);
    } catch (const std::exception& e) {
      throw CLI::ConversionError(std::string("config: ") + e.what());
    }
    const ordered_json& cfg = doc.contains("config") ? doc["config"] : doc;
    std::vector<CLI::ConfigItem> out;
    for (const auto& [section, values] : cfg.items()) {
      if (!values.is_object()) continue;
      for (const auto& [key, value] : values.items()) {
        if (value.is_null()) continue;
        CLI::ConfigItem item;
        item.name = section + "." + key;
        if (value.is_array()) {
          for (const auto& v : value) item.inputs.push_back(scalar(v));
        } else {
          item.inputs.push_back(scalar(value));
        }
        out.push_back(std::move(item));
      }
    }
    return out;
  }
};

struct Settings {
  std::string command;
  // data
  std::string panel;
  std::string network;
  std::string out = "out";
  std::string basis;
  // network
  double cutoff = 0.0;
  bool row_normalize = false;
  // exposure
  std::string coarsening = "three_state";
  std::vector<double> psi{1.0};
  // estimators
  int min_cell = 5;
  int delta = 0;
  int event_max = 2;
  std::string first_stage = "saturated";
  int spline_df = 4;
  bool local_pde = true;
  bool diagnostics = true;
  // inference
  bool inference = true;
  std::string kernel = "bartlett";
  std::string kernel_table;
  std::string bandwidth = "n_cuberoot";
  double alpha = 0.05;
  int band_draws = 2000;
  std::uint64_t seed = 1;
  bool strict = false;
  // run
  int threads = 1;
  // simulate
  std::vector<std::string> designs{"dgp1"};
  std::vector<int> sizes{200};
  int reps = 1000;
  bool records = false;
  double noise_scale = 1.0;
  int line_radius = 1;
  int export_draw = -1;
};

int default_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

void add_common(CLI::App& app, Settings& s) {
  app.set_config("--config", "", "TOML config file or a previous run.json");
  app.config_formatter(std::make_shared<SectionedConfig>());
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.add_option("--out,--data.out", s.out, "Output directory")->capture_default_str();
  app.add_option("--seed,--inference.seed", s.seed, "Random seed")->capture_default_str();
  app.add_option("--threads,--run.threads", s.threads, "Worker threads; 1 is bitwise deterministic")
      ->capture_default_str();
  app.add_option("--alpha,--inference.alpha", s.alpha, "Significance level")
      ->capture_default_str();
  app.add_option("--kernel,--inference.kernel", s.kernel, "bartlett | uniform | tabulated")
      ->capture_default_str();
  app.add_option("--kernel-table,--inference.kernel_table", s.kernel_table,
                 "Tabulated kernel knots u:K,u:K,...");
  app.add_option("--bandwidth,--inference.bandwidth", s.bandwidth,
                 "Positive number or n_cuberoot")
      ->capture_default_str();
  app.add_option("--min-cell,--estimators.min_cell", s.min_cell, "Minimum cell count m_N")
      ->capture_default_str();
  app.add_option("--event-max,--estimators.event_max", s.event_max, "Largest event time")
      ->capture_default_str();
}

void add_data(CLI::App& app, Settings& s, bool with_network = true) {
  app.add_option("--panel,--data.panel", s.panel, "Long-format panel CSV");
  if (with_network) {
    app.add_option("--network,--data.network", s.network, "Edge list or unit-by-unit matrix");
    app.add_option("--cutoff,--network.cutoff", s.cutoff,
                   "Distance cutoff when the network file is a distance matrix")
        ->capture_default_str();
    app.add_option("--row-normalize,--network.row_normalize", s.row_normalize,
                   "Row-normalize network weights")
        ->capture_default_str();
  }
  app.add_option("--basis,--data.basis", s.basis, "Comma-separated basis columns");
  app.add_option("--delta,--estimators.delta", s.delta, "Anticipation periods")
      ->capture_default_str();
  app.add_option("--coarsening,--exposure.coarsening", s.coarsening, "three_state | binary")
      ->capture_default_str();
  app.add_option("--psi,--exposure.psi", s.psi, "Temporal kernel by lag; last entry repeats")
      ->delimiter(',')
      ->capture_default_str();
}

void add_estimation(CLI::App& app, Settings& s) {
  app.add_option("--first-stage,--estimators.first_stage", s.first_stage,
                 "saturated | structured | dose")
      ->capture_default_str();
  app.add_option("--spline-df,--estimators.spline_df", s.spline_df,
                 "Spline degrees of freedom for the structured first stage")
      ->capture_default_str();
  app.add_option("--local-pde,--estimators.local_pde", s.local_pde, "Report the local PDE")
      ->capture_default_str();
  app.add_option("--diagnostics,--estimators.diagnostics", s.diagnostics,
                 "Report never-treated CSE diagnostics")
      ->capture_default_str();
  app.add_option("--inference,--inference.enabled", s.inference, "Compute intervals")
      ->capture_default_str();
  app.add_option("--band-draws,--inference.band_draws", s.band_draws,
                 "Gaussian draws for simultaneous bands; 0 disables")
      ->capture_default_str();
  app.add_option("--strict-inference,--inference.strict", s.strict,
                 "Fail on a singular stacked system instead of warning")
      ->capture_default_str();
}

void add_simulate(CLI::App& app, Settings& s) {
  s.first_stage = "dose";
  app.add_option("--design,--simulate.design", s.designs, "dgp1 | dgp2 | dgp3 | all")
      ->delimiter(',')
      ->capture_default_str();
  app.add_option("--n,--simulate.n", s.sizes, "Cross-section sizes")
      ->delimiter(',')
      ->capture_default_str();
  app.add_option("--reps,--simulate.reps", s.reps, "Replications per design and size")
      ->capture_default_str();
  app.add_option("--first-stage,--estimators.first_stage", s.first_stage,
                 "saturated | structured | dose")
      ->capture_default_str();
  app.add_option("--records,--simulate.records", s.records,
                 "Write per-replication records")
      ->capture_default_str();
  app.add_option("--noise-scale,--simulate.noise_scale", s.noise_scale,
                 "Multiplier on idiosyncratic errors")
      ->capture_default_str();
  app.add_option("--line-radius,--simulate.line_radius", s.line_radius,
                 "Neighbor radius of the line network")
      ->capture_default_str();
  app.add_option("--export-draw,--simulate.export_draw", s.export_draw,
                 "Write replication r of the first design and size as panel and network CSV");
}

int first_stage_code(const std::string& name) {
  if (name == "saturated") return SD_FIRST_STAGE_SATURATED;
  if (name == "structured") return SD_FIRST_STAGE_STRUCTURED;
  if (name == "dose") return SD_FIRST_STAGE_DOSE;
  fail(kExitValidation, "unknown first stage '" + name + "'");
}

int kernel_code(const std::string& name) {
  if (name == "bartlett") return SD_KERNEL_BARTLETT;
  if (name == "uniform") return SD_KERNEL_UNIFORM;
  if (name == "tabulated") return SD_KERNEL_TABULATED;
  fail(kExitValidation, "unknown kernel '" + name + "'");
}

int design_code(const std::string& name) {
  if (name == "dgp1") return SD_DGP1;
  if (name == "dgp2") return SD_DGP2;
  if (name == "dgp3") return SD_DGP3;
  fail(kExitValidation, "unknown design '" + name + "'");
}

double parse_number(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    fail(kExitValidation, what + ": '" + text + "' is not a number");
  }
}

double bandwidth_value(const Settings& s) {
  if (s.bandwidth == "n_cuberoot") return 0.0;
  const double b = parse_number(s.bandwidth, "bandwidth");
  if (!(b > 0.0)) fail(kExitValidation, "bandwidth must be positive");
  return b;
}

struct KernelTable {
  std::vector<double> u;
  std::vector<double> k;
};

KernelTable parse_kernel_table(const std::string& text) {
  KernelTable t;
  std::stringstream in(text);
  std::string knot;
  while (std::getline(in, knot, ',')) {
    const auto colon = knot.find(':');
    if (colon == std::string::npos) fail(kExitValidation, "kernel table knot '" + knot + "'");
    t.u.push_back(parse_number(knot.substr(0, colon), "kernel table"));
    t.k.push_back(parse_number(knot.substr(colon + 1), "kernel table"));
  }
  return t;
}

// Precondition checks that need no data.
void validate_settings(const Settings& s) {
  auto need = [](bool ok, const std::string& message) {
    if (!ok) fail(kExitValidation, message);
  };
  need(s.threads >= 1, "threads must be >= 1");
  need(s.alpha > 0.0 && s.alpha < 1.0, "alpha must be in (0, 1)");
  need(s.min_cell >= 1, "min-cell must be >= 1");
  need(s.event_max >= 0, "event-max must be >= 0");
  need(!s.out.empty(), "output directory is empty");
  kernel_code(s.kernel);
  first_stage_code(s.first_stage);
  bandwidth_value(s);
  need(s.kernel != "tabulated" || !s.kernel_table.empty(),
       "kernel tabulated needs --kernel-table");
  if (s.command == "simulate") {
    need(s.reps >= 1, "reps must be >= 1");
    need(!s.sizes.empty(), "at least one --n is required");
    for (int n : s.sizes) need(n >= 1, "n must be >= 1");
    for (const auto& d : s.designs) {
      if (d != "all") design_code(d);
    }
    need(s.noise_scale >= 0.0, "noise-scale must be >= 0");
    need(s.line_radius >= 1, "line-radius must be >= 1");
    return;
  }
  need(s.delta >= 0, "delta must be >= 0");
  need(s.coarsening == "three_state" || s.coarsening == "binary",
       "coarsening must be three_state or binary");
  need(!s.psi.empty(), "psi needs at least one entry");
  need(s.cutoff >= 0.0, "cutoff must be >= 0");
  need(s.band_draws >= 0, "band-draws must be >= 0");
  need(s.spline_df >= 1, "spline-df must be >= 1");
  need(!s.panel.empty(), "--panel is required");
  need(!s.network.empty(), "--network is required");
  if (!fs::exists(s.panel)) fail(kExitValidation, "panel not found: " + s.panel);
  if (!fs::exists(s.network)) fail(kExitValidation, "network not found: " + s.network);
}

ordered_json config_json(const Settings& s) {
  ordered_json c;
  if (s.command == "simulate") {
    c["simulate"] = {{"design", s.designs}, {"n", s.sizes}, {"reps", s.reps},
                     {"records", s.records}, {"noise_scale", s.noise_scale},
                     {"line_radius", s.line_radius}};
    if (s.export_draw >= 0) c["simulate"]["export_draw"] = s.export_draw;
    c["estimators"] = {{"min_cell", s.min_cell}, {"event_max", s.event_max},
                       {"first_stage", s.first_stage}};
  } else {
    c["data"] = {{"panel", s.panel}, {"network", s.network}, {"basis", s.basis}};
    c["network"] = {{"cutoff", s.cutoff}, {"row_normalize", s.row_normalize}};
    c["exposure"] = {{"coarsening", s.coarsening}, {"psi", s.psi}};
    c["estimators"] = {{"delta", s.delta}};
    if (s.command != "exposure") {
      c["estimators"]["min_cell"] = s.min_cell;
      c["estimators"]["event_max"] = s.event_max;
      c["estimators"]["first_stage"] = s.first_stage;
      c["estimators"]["spline_df"] = s.spline_df;
      c["estimators"]["local_pde"] = s.local_pde;
      c["estimators"]["diagnostics"] = s.diagnostics;
    }
  }
  c["data"]["out"] = s.out;
  if (s.command != "exposure") {
    c["inference"] = {{"kernel", s.kernel}, {"bandwidth", s.bandwidth}, {"alpha", s.alpha},
                      {"seed", s.seed}};
    if (!s.kernel_table.empty()) c["inference"]["kernel_table"] = s.kernel_table;
    if (s.command != "simulate") {
      c["inference"]["enabled"] = s.inference;
      c["inference"]["band_draws"] = s.band_draws;
      c["inference"]["strict"] = s.strict;
    }
  }
  c["run"] = {{"threads", s.threads}};
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) fail(kExitIo, "cannot write '" + path.string() + "'");
  f << text;
  if (!f) fail(kExitIo, "write failed for '" + path.string() + "'");
}

void write_run_json(const Settings& s, const std::vector<std::string>& artifacts,
                    const std::vector<std::string>& warnings, double bandwidth) {
  ordered_json run;
  run["command"] = s.command;
  run["version"] = sd_version();
  run["seed"] = s.seed;
  if (bandwidth > 0.0) run["bandwidth"] = bandwidth;
  run["config"] = config_json(s);
  run["artifacts"] = artifacts;
  run["warnings"] = warnings;
  write_text(fs::path(s.out) / "run.json", run.dump(2) + "\n");
}

void make_out_dir(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) fail(kExitIo, "cannot create output directory '" + out + "'");
}

template <typename T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(ptr); }
};

using PanelHandle = Handle<sd_panel, sd_panel_free>;
using NetworkHandle = Handle<sd_network, sd_network_free>;
using ExposureHandle = Handle<sd_exposure, sd_exposure_free>;
using ResultHandle = Handle<sd_result, sd_result_free>;
using ReportHandle = Handle<sd_mc_report, sd_mc_report_free>;

struct Inputs {
  PanelHandle panel;
  NetworkHandle network;
  ExposureHandle exposure;
};

void load_inputs(const Settings& s, Inputs& in) {
  check(sd_panel_load(s.panel.c_str(), s.basis.empty() ? nullptr : s.basis.c_str(), s.delta,
                      &in.panel.ptr));
  check(sd_network_load(s.network.c_str(), in.panel.ptr, s.cutoff, s.row_normalize,
                        &in.network.ptr));
  check(sd_exposure_compute(in.panel.ptr, in.network.ptr, s.coarsening.c_str(), s.psi.data(),
                            static_cast<int>(s.psi.size()), &in.exposure.ptr));
}

std::vector<std::string> result_warnings(const sd_result* r) {
  std::vector<std::string> out;
  for (int k = 0; k < sd_result_n_warnings(r); ++k) out.emplace_back(sd_result_warning(r, k));
  return out;
}

void estimate_into(const Settings& s, Inputs& in, ResultHandle& result) {
  const int fs_kind = first_stage_code(s.first_stage);
  if (fs_kind == SD_FIRST_STAGE_STRUCTURED && sd_panel_n_basis(in.panel.ptr) == 0) {
    fail(kExitValidation, "first stage structured requires basis columns");
  }
  sd_estimate_options o;
  sd_estimate_options_default(&o);
  o.min_cell = s.min_cell;
  o.event_max = s.event_max;
  o.first_stage = fs_kind;
  o.spline_df = s.spline_df;
  o.inference = s.inference;
  o.alpha = s.alpha;
  o.kernel = kernel_code(s.kernel);
  KernelTable table;
  if (!s.kernel_table.empty()) {
    table = parse_kernel_table(s.kernel_table);
    o.kernel_table_u = table.u.data();
    o.kernel_table_k = table.k.data();
    o.kernel_table_size = static_cast<int>(table.u.size());
  }
  o.bandwidth = bandwidth_value(s);
  o.band_draws = s.band_draws;
  o.seed = s.seed;
  o.threads = s.threads;
  o.benchmarks = 1;
  o.local_pde = s.local_pde;
  o.diagnostics = s.diagnostics;
  o.strict_inference = s.strict;
  check(sd_estimate(in.panel.ptr, in.exposure.ptr, in.network.ptr, &o, &result.ptr));
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

int cmd_estimate(const Settings& s) {
  Inputs in;
  load_inputs(s, in);
  ResultHandle result;
  estimate_into(s, in, result);
  make_out_dir(s.out);
  const fs::path out(s.out);
  check(sd_result_write_estimates(result.ptr, (out / "estimates.csv").c_str()));
  check(sd_result_write_support(result.ptr, (out / "support.csv").c_str()));
  const auto warnings = result_warnings(result.ptr);
  write_run_json(s, {"estimates.csv", "support.csv", "run.json"}, warnings,
                 sd_result_bandwidth(result.ptr));
  print_warnings(warnings);
  std::cout << "wrote " << (out / "estimates.csv").string() << " ("
            << sd_result_n_cells(result.ptr) << " cell and " << sd_result_n_events(result.ptr)
            << " event-time records)\n";
  return 0;
}

int cmd_benchmark(const Settings& s) {
  Inputs in;
  load_inputs(s, in);
  ResultHandle result;
  estimate_into(s, in, result);
  make_out_dir(s.out);
  const fs::path out(s.out);
  check(sd_result_write_benchmark(result.ptr, (out / "benchmark.csv").c_str()));
  const auto warnings = result_warnings(result.ptr);
  write_run_json(s, {"benchmark.csv", "run.json"}, warnings, sd_result_bandwidth(result.ptr));
  print_warnings(warnings);
  std::cout << "wrote " << (out / "benchmark.csv").string() << "\n";
  return 0;
}

int cmd_exposure(const Settings& s) {
  Inputs in;
  load_inputs(s, in);
  make_out_dir(s.out);
  const fs::path out(s.out);
  check(sd_exposure_write(in.exposure.ptr, in.panel.ptr, (out / "exposure.csv").c_str()));
  write_run_json(s, {"exposure.csv", "run.json"}, {}, 0.0);
  std::cout << "wrote " << (out / "exposure.csv").string() << "\n";
  return 0;
}

sd_simulate_options simulate_options(const Settings& s, int design, int n) {
  sd_simulate_options o;
  sd_simulate_options_default(&o);
  o.design = design;
  o.n_units = n;
  o.replications = s.reps;
  o.seed = s.seed;
  o.threads = s.threads;
  o.alpha = s.alpha;
  o.kernel = kernel_code(s.kernel);
  o.bandwidth = bandwidth_value(s);
  o.first_stage = first_stage_code(s.first_stage);
  o.keep_records = s.records;
  o.min_cell = s.min_cell;
  o.event_max = s.event_max;
  o.line_radius = s.line_radius;
  o.noise_scale = s.noise_scale;
  return o;
}

int cmd_simulate(const Settings& s) {
  std::vector<std::string> designs;
  for (const auto& d : s.designs) {
    if (d == "all") {
      designs.insert(designs.end(), {"dgp1", "dgp2", "dgp3"});
    } else {
      designs.push_back(d);
    }
  }
  make_out_dir(s.out);
  const fs::path out(s.out);
  if (s.export_draw >= 0) {
    const auto o = simulate_options(s, design_code(designs.front()), s.sizes.front());
    PanelHandle panel;
    NetworkHandle network;
    check(sd_simulate_draw(&o, s.export_draw, &panel.ptr, &network.ptr));
    check(sd_panel_save(panel.ptr, (out / "draw_panel.csv").c_str()));
    check(sd_network_save(network.ptr, panel.ptr, (out / "draw_network.csv").c_str()));
    write_run_json(s, {"draw_panel.csv", "draw_network.csv", "run.json"}, {}, 0.0);
    std::cout << "wrote " << (out / "draw_panel.csv").string() << "\n";
    return 0;
  }
  std::vector<std::unique_ptr<ReportHandle>> reports;
  std::vector<std::string> artifacts{"mc_summary.csv", "mc_tables.txt"};
  std::vector<std::string> warnings;
  for (const auto& d : designs) {
    for (int n : s.sizes) {
      const auto o = simulate_options(s, design_code(d), n);
      auto report = std::make_unique<ReportHandle>();
      check(sd_simulate(&o, &report->ptr));
      if (const int f = sd_mc_report_failures(report->ptr); f > 0) {
        warnings.push_back(d + " n=" + std::to_string(n) + ": " + std::to_string(f) +
                           " replications failed");
      }
      if (s.records) {
        const std::string name = "records_" + d + "_n" + std::to_string(n) + ".csv";
        check(sd_mc_write_records(report->ptr, (out / name).c_str()));
        artifacts.push_back(name);
      }
      reports.push_back(std::move(report));
    }
  }
  std::vector<const sd_mc_report*> ptrs;
  for (const auto& r : reports) ptrs.push_back(r->ptr);
  const int n = static_cast<int>(ptrs.size());
  check(sd_mc_write_summary(ptrs.data(), n, (out / "mc_summary.csv").c_str()));
  check(sd_mc_write_tables(ptrs.data(), n, (out / "mc_tables.txt").c_str()));
  artifacts.push_back("run.json");
  write_run_json(s, artifacts, warnings, 0.0);
  print_warnings(warnings);
  std::ifstream tables(out / "mc_tables.txt");
  std::cout << tables.rdbuf();
  return 0;
}

std::string error_kind(int code) {
  switch (code) {
    case kExitValidation: return "validation";
    case kExitInference: return "inference";
    case kExitIo: return "io";
  }
  return "internal";
}

int report_error(const Settings& s, int code, const std::string& message) {
  ordered_json err;
  err["error"] = {{"code", code}, {"kind", error_kind(code)}, {"message", message}};
  if (!s.command.empty()) err["error"]["command"] = s.command;
  std::cerr << err.dump() << "\n";
  if (!s.out.empty() && fs::is_directory(s.out)) {
    std::ofstream f(fs::path(s.out) / "error.json");
    if (f) f << err.dump(2) << "\n";
  }
  return code;
}

void usage(std::ostream& os) {
  os << "usage: spilldid <estimate|simulate|benchmark|exposure> [options]\n"
        "       spilldid <command> --help\n"
        "       spilldid --version\n";
}

}  // namespace

int main(int argc, char** argv) {
  Settings s;
  s.threads = default_threads();
  if (argc < 2) {
    usage(std::cerr);
    return report_error(s, kExitValidation, "missing command");
  }
  const std::string command = argv[1];
  if (command == "--help" || command == "-h") {
    usage(std::cout);
    return 0;
  }
  if (command == "--version") {
    std::cout << "spilldid " << sd_version() << "\n";
    return 0;
  }
  if (command != "estimate" && command != "simulate" && command != "benchmark" &&
      command != "exposure") {
    usage(std::cerr);
    return report_error(s, kExitValidation, "unknown command '" + command + "'");
  }
  s.command = command;

  CLI::App app{"spilldid " + command, "spilldid " + command};
  add_common(app, s);
  if (command == "simulate") {
    add_simulate(app, s);
  } else {
    add_data(app, s);
    if (command != "exposure") add_estimation(app, s);
  }

  try {
    app.parse(argc - 1, argv + 1);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error(s, kExitValidation, e.what());
  }

  try {
    validate_settings(s);
    if (command == "estimate") return cmd_estimate(s);
    if (command == "benchmark") return cmd_benchmark(s);
    if (command == "exposure") return cmd_exposure(s);
    return cmd_simulate(s);
  } catch (const CliError& e) {
    return report_error(s, e.code, e.message);
  } catch (const std::exception& e) {
    return report_error(s, kExitInternal, e.what());
  }
}
