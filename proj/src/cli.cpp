// Copyright 2026 The echo-gfa Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "echogfa/cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "echogfa/echo.hpp"
#include "echogfa/master.hpp"
#include "echogfa/rmt.hpp"
#include "echogfa/rng.hpp"
#include "echogfa/volterra.hpp"

namespace echogfa::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kHeader = "t,re_f,im_f,re_err,im_err";

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw ConfigError("config key '" + key + "': " + what);
}

void reject_unknown(const json& object, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (const auto& item : object.items()) {
    if (!allowed.contains(item.key())) {
      throw ConfigError("unknown config key '" + where + item.key() + "'");
    }
  }
}

double get_real(const json& j, const std::string& key) {
  if (!j.is_number()) fail(key, "expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) fail(key, "must be finite");
  return x;
}

std::int64_t get_integer(const json& j, const std::string& key) {
  if (j.is_number_unsigned()) {
    const auto u = j.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
      fail(key, "integer out of range");
    }
    return static_cast<std::int64_t>(u);
  }
  if (!j.is_number_integer()) fail(key, "expected an integer");
  return j.get<std::int64_t>();
}

std::uint64_t get_seed(const json& j, const std::string& key) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) fail(key, "must be non-negative");
  fail(key, "expected an unsigned 64-bit integer");
}

std::string get_string(const json& j, const std::string& key) {
  if (!j.is_string()) fail(key, "expected a string");
  return j.get<std::string>();
}

Index get_count(const json& j, const std::string& key, Index minimum) {
  const auto n = get_integer(j, key);
  if (n < minimum) fail(key, "must be at least " + std::to_string(minimum));
  return static_cast<Index>(n);
}

// Rows of numbers or [re, im] pairs.
Eigen::MatrixXcd get_matrix(const json& j, const std::string& key) {
  if (!j.is_array() || j.empty()) fail(key, "expected a non-empty array of rows");
  const auto n = static_cast<Index>(j.size());
  Eigen::MatrixXcd m(n, n);
  for (Index r = 0; r < n; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != n) fail(key, "matrix must be square");
    for (Index c = 0; c < n; ++c) {
      const json& e = row[static_cast<std::size_t>(c)];
      if (e.is_number()) {
        m(r, c) = get_real(e, key);
      } else if (e.is_array() && e.size() == 2) {
        m(r, c) = Complex(get_real(e[0], key), get_real(e[1], key));
      } else {
        fail(key, "entries must be numbers or [re, im] pairs");
      }
    }
  }
  return m;
}

TheoryOptions parse_theory(const json& j) {
  if (!j.is_object()) fail("theory", "expected an object");
  reject_unknown(j, {"kernels_from", "fresh"}, "theory.");
  TheoryOptions t;
  if (j.contains("kernels_from")) t.kernels_from = get_string(j["kernels_from"], "theory.kernels_from");
  if (j.contains("fresh")) {
    if (!j["fresh"].is_boolean()) fail("theory.fresh", "expected true or false");
    t.fresh = j["fresh"].get<bool>();
  }
  if (t.fresh == t.kernels_from.has_value()) {
    throw ConfigError("config key 'theory': set exactly one of kernels_from or fresh=true");
  }
  return t;
}

GeneralOptions parse_general(const json& j) {
  if (!j.is_object()) fail("general", "expected an object");
  reject_unknown(j,
                 {"kernel", "c0", "tau_c", "coupling_strength", "coupling_beta", "n_draws",
                  "coupling_matrix"},
                 "general.");
  GeneralOptions g;
  if (j.contains("kernel")) {
    const std::string name = get_string(j["kernel"], "general.kernel");
    if (name == "delta") {
      g.kernel = GeneralOptions::Kernel::delta;
    } else if (name == "exponential") {
      g.kernel = GeneralOptions::Kernel::exponential;
    } else {
      fail("general.kernel", "expected delta or exponential, got '" + name + "'");
    }
  }
  if (j.contains("c0")) g.c0 = get_real(j["c0"], "general.c0");
  if (g.c0 <= 0.0) fail("general.c0", "must be positive");
  if (j.contains("tau_c")) g.tau_c = get_real(j["tau_c"], "general.tau_c");
  if (g.kernel == GeneralOptions::Kernel::exponential && g.tau_c <= 0.0) {
    fail("general.tau_c", "must be positive for the exponential kernel");
  }
  if (j.contains("coupling_strength")) {
    g.coupling_strength = get_real(j["coupling_strength"], "general.coupling_strength");
  }
  if (g.coupling_strength < 0.0) fail("general.coupling_strength", "must be non-negative");
  if (j.contains("coupling_beta")) {
    try {
      g.coupling_beta = rmt::symmetry_class_from_beta(
          static_cast<int>(get_integer(j["coupling_beta"], "general.coupling_beta")));
    } catch (const InvalidClass& e) {
      fail("general.coupling_beta", e.what());
    }
  }
  if (j.contains("n_draws")) g.n_draws = get_count(j["n_draws"], "general.n_draws", 1);
  if (j.contains("coupling_matrix")) {
    g.coupling_matrix = get_matrix(j["coupling_matrix"], "general.coupling_matrix");
    if (!g.coupling_matrix->isApprox(g.coupling_matrix->adjoint(), 1e-12)) {
      fail("general.coupling_matrix", "must be Hermitian");
    }
  }
  return g;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return buf;
}

double parse_double(const std::string& field) {
  if (field == "nan") return std::numeric_limits<double>::quiet_NaN();
  char* end = nullptr;
  const double x = std::strtod(field.c_str(), &end);
  if (field.empty() || end != field.c_str() + field.size()) {
    throw ConfigError("malformed number '" + field + "' in table");
  }
  return x;
}

json number_or_null(double x) { return std::isnan(x) ? json(nullptr) : json(x); }

double number_from(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) throw ConfigError("malformed number in table");
  return j.get<double>();
}

// Rows (t, re, im, re_err, im_err) back into a curve.
FidelityCurve curve_from_rows(const std::vector<std::array<double, 5>>& rows) {
  if (rows.empty()) throw ConfigError("table has no rows");
  FidelityCurve c;
  c.grid.points = static_cast<Index>(rows.size());
  c.grid.dt = rows.size() > 1 ? rows[1][0] : 1.0;
  bool any_error = false;
  std::vector<Complex> err;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r[0] != c.grid.time(static_cast<Index>(i))) {
      throw ConfigError("table time column is not a uniform grid starting at 0");
    }
    c.values.emplace_back(r[1], r[2]);
    err.emplace_back(r[3], r[4]);
    any_error = any_error || !std::isnan(r[3]) || !std::isnan(r[4]);
  }
  if (any_error) c.error = std::move(err);
  return c;
}

struct Output {
  fs::path dir;
  OutputFormat format;
  std::vector<fs::path> files;
  json inventory = json::array();

  void table(const std::string& stem, const FidelityCurve& curve, const std::string& quantity,
             std::optional<double> gamma = std::nullopt) {
    const fs::path path = dir / (stem + extension(format));
    write_text(path, format_table(curve, format));
    files.push_back(path);
    json entry = {{"file", path.filename().string()}, {"quantity", quantity},
                  {"rows", curve.values.size()}};
    if (gamma) entry["gamma"] = *gamma;
    inventory.push_back(entry);
  }
};

Output open_output(const CliConfig& config) {
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) {
    throw IoError("cannot create output directory '" + config.output_dir.string() +
                  "': " + ec.message());
  }
  return Output{config.output_dir, config.format, {}, json::array()};
}

json base_manifest(const CliConfig& config, const std::string& command) {
  const auto& e = config.experiment;
  return json{{"command", command},
              {"config_hash", harness::config_fingerprint(e)},
              {"master_seed", e.ensemble.master_seed},
              {"realization_index", "batch * n_run + run"},
              {"dim", e.ensemble.dim},
              {"beta", static_cast<int>(e.ensemble.beta)},
              {"lambda", e.lambda},
              {"dt", e.grid.dt},
              {"points", e.grid.points},
              {"n_run", e.n_run},
              {"n_batch", e.n_batch},
              {"method", harness::to_string(e.resolved_method())},
              {"threads", e.threads},
              {"format", config.format == OutputFormat::csv ? "csv" : "json"}};
}

void finish_manifest(Output& out, json manifest,
                     std::chrono::steady_clock::time_point started) {
  manifest["elapsed_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  manifest["files"] = out.inventory;
  write_text(out.dir / "manifest.json", manifest.dump(2) + "\n");
}

fs::path find_table(const fs::path& dir, const std::string& stem, OutputFormat preferred) {
  const OutputFormat other = preferred == OutputFormat::csv ? OutputFormat::json : OutputFormat::csv;
  for (OutputFormat f : {preferred, other}) {
    const fs::path p = dir / (stem + extension(f));
    if (fs::exists(p)) return p;
  }
  throw ConfigError("theory.kernels_from: no '" + stem + "' table in '" + dir.string() + "'");
}

void check_theory_steps(const std::vector<double>& gammas, double dt) {
  for (double g : gammas) {
    if (0.5 * g * dt >= 1.0) {
      throw ConfigError("Gamma=" + gamma_tag(g) + " with dt=" + format_double(dt) +
                        " violates Gamma*dt/2 < 1");
    }
  }
}

}  // namespace

CliConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(doc,
                 {"dim", "beta", "master_seed", "lambda", "gamma_list", "dt", "t_max", "n_run",
                  "n_batch", "method", "initial_state", "max_superoperator_dim", "output_dir",
                  "format", "theory", "general"},
                 "");
  for (const char* key : {"dim", "lambda", "dt", "t_max"}) {
    if (!doc.contains(key)) throw ConfigError(std::string("missing required config key '") + key + "'");
  }

  CliConfig c;
  auto& e = c.experiment;
  e.ensemble.dim = get_count(doc["dim"], "dim", 2);
  if (doc.contains("beta")) {
    try {
      e.ensemble.beta =
          rmt::symmetry_class_from_beta(static_cast<int>(get_integer(doc["beta"], "beta")));
    } catch (const InvalidClass& err) {
      fail("beta", err.what());
    }
  }
  if (doc.contains("master_seed")) e.ensemble.master_seed = get_seed(doc["master_seed"], "master_seed");
  e.lambda = get_real(doc["lambda"], "lambda");

  if (doc.contains("gamma_list")) {
    const json& list = doc["gamma_list"];
    if (!list.is_array()) fail("gamma_list", "expected an array of numbers");
    for (const auto& g : list) {
      const double v = get_real(g, "gamma_list");
      if (v < 0.0) fail("gamma_list", "values must be non-negative");
      if (std::find(e.gamma_list.begin(), e.gamma_list.end(), v) != e.gamma_list.end()) {
        fail("gamma_list", "duplicate value " + gamma_tag(v));
      }
      e.gamma_list.push_back(v);
    }
  }

  const double dt = get_real(doc["dt"], "dt");
  const double t_max = get_real(doc["t_max"], "t_max");
  if (dt <= 0.0) fail("dt", "must be positive");
  if (t_max < 0.0) fail("t_max", "must be non-negative");
  const double steps = t_max / dt;
  const double rounded = std::round(steps);
  if (std::abs(steps - rounded) > 1e-9 * std::max(1.0, steps)) {
    fail("t_max", "must be an integer multiple of dt");
  }
  if (rounded > 5e8) fail("t_max", "grid too long");
  e.grid = TimeGrid::uniform(dt, static_cast<Index>(rounded));

  if (doc.contains("n_run")) e.n_run = get_count(doc["n_run"], "n_run", 1);
  if (doc.contains("n_batch")) e.n_batch = get_count(doc["n_batch"], "n_batch", 1);
  if (doc.contains("method")) {
    try {
      e.method = harness::simulation_method_from_string(get_string(doc["method"], "method"));
    } catch (const InvalidArgument& err) {
      fail("method", err.what());
    }
  }
  if (doc.contains("initial_state")) {
    const json& s = doc["initial_state"];
    if (s.is_string()) {
      if (s.get<std::string>() != "mixed") fail("initial_state", "expected \"mixed\" or a matrix");
    } else {
      e.initial_state = get_matrix(s, "initial_state");
    }
  }
  if (doc.contains("max_superoperator_dim")) {
    e.max_superoperator_dim = get_count(doc["max_superoperator_dim"], "max_superoperator_dim", 2);
  }
  if (doc.contains("output_dir")) c.output_dir = get_string(doc["output_dir"], "output_dir");
  if (doc.contains("format")) {
    try {
      c.format = output_format_from_string(get_string(doc["format"], "format"));
    } catch (const ConfigError& err) {
      fail("format", err.what());
    }
  }
  if (doc.contains("theory")) c.theory = parse_theory(doc["theory"]);
  if (doc.contains("general")) c.general = parse_general(doc["general"]);
  return c;
}

CliConfig load_config(const fs::path& path) { return parse_config(read_text(path)); }

void validate(const CliConfig& config) {
  try {
    config.experiment.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
}

OutputFormat output_format_from_string(const std::string& name) {
  if (name == "csv") return OutputFormat::csv;
  if (name == "json") return OutputFormat::json;
  throw ConfigError("unknown output format '" + name + "' (expected csv or json)");
}

std::string extension(OutputFormat format) {
  return format == OutputFormat::csv ? ".csv" : ".json";
}

std::string format_table(const FidelityCurve& curve, OutputFormat format) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto err = [&](std::size_t i) {
    return curve.error ? (*curve.error)[i] : Complex(nan, nan);
  };
  if (format == OutputFormat::json) {
    json rows = json::array();
    for (std::size_t i = 0; i < curve.values.size(); ++i) {
      const Complex e = err(i);
      rows.push_back({curve.grid.time(static_cast<Index>(i)), curve.values[i].real(),
                      curve.values[i].imag(), number_or_null(e.real()), number_or_null(e.imag())});
    }
    json doc = {{"columns", {"t", "re_f", "im_f", "re_err", "im_err"}}, {"rows", rows}};
    return doc.dump() + "\n";
  }
  std::string out = std::string(kHeader) + "\n";
  out.reserve(out.size() + curve.values.size() * 120);
  for (std::size_t i = 0; i < curve.values.size(); ++i) {
    const Complex e = err(i);
    out += format_double(curve.grid.time(static_cast<Index>(i)));
    for (double x : {curve.values[i].real(), curve.values[i].imag(), e.real(), e.imag()}) {
      out += ',';
      out += format_double(x);
    }
    out += '\n';
  }
  return out;
}

FidelityCurve parse_table(const std::string& text, OutputFormat format) {
  std::vector<std::array<double, 5>> rows;
  if (format == OutputFormat::json) {
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("table is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("rows") || !doc["rows"].is_array()) {
      throw ConfigError("JSON table must hold a 'rows' array");
    }
    for (const auto& r : doc["rows"]) {
      if (!r.is_array() || r.size() != 5) throw ConfigError("JSON table rows need 5 columns");
      rows.push_back({number_from(r[0]), number_from(r[1]), number_from(r[2]), number_from(r[3]),
                      number_from(r[4])});
    }
    return curve_from_rows(rows);
  }

  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kHeader) {
    throw ConfigError(std::string("table header must be '") + kHeader + "'");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::array<double, 5> row{};
    std::size_t start = 0;
    for (std::size_t k = 0; k < 5; ++k) {
      const std::size_t comma = line.find(',', start);
      if ((k < 4) != (comma != std::string::npos)) throw ConfigError("table rows need 5 columns");
      row[k] = parse_double(line.substr(start, comma == std::string::npos ? comma : comma - start));
      start = comma + 1;
    }
    rows.push_back(row);
  }
  return curve_from_rows(rows);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.close();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream s;
  s << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return s.str();
}

FidelityCurve read_table(const fs::path& path) {
  const OutputFormat f = path.extension() == ".json" ? OutputFormat::json : OutputFormat::csv;
  try {
    return parse_table(read_text(path), f);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string gamma_tag(double gamma) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, gamma);
  return std::string(buf, r.ptr);
}

void cmd_validate(const CliConfig& config) {
  validate(config);
  if (config.theory && config.theory->kernels_from &&
      !fs::is_directory(*config.theory->kernels_from)) {
    throw ConfigError("theory.kernels_from: '" + config.theory->kernels_from->string() +
                      "' is not a directory");
  }
  if (config.general) {
    if (config.experiment.method == harness::SimulationMethod::volterra) {
      throw ConfigError("the general master equation has no Volterra route; use auto, "
                        "superoperator or stepper");
    }
    const auto& m = config.general->coupling_matrix;
    if (m && m->rows() != config.experiment.ensemble.dim) {
      throw ConfigError("general.coupling_matrix dimension does not match dim");
    }
  }
}

CommandResult cmd_simulate(const CliConfig& config, const harness::ProgressCallback& progress) {
  const auto started = std::chrono::steady_clock::now();
  validate(config);
  Output out = open_output(config);
  const harness::RunReport report = harness::run_ensemble(config.experiment, progress);

  out.table("f_lambda", report.fidelity, "f_lambda");
  out.table("kernel", report.kernel, "kernel");
  json gammas = json::array();
  for (const auto& g : report.per_gamma) {
    const std::string tag = gamma_tag(g.gamma);
    out.table("simulated_g" + tag, g.simulated, "simulated", g.gamma);
    out.table("simulated_difference_g" + tag, g.simulated_difference, "simulated_difference",
              g.gamma);
    out.table("theory_g" + tag, g.theory, "theory", g.gamma);
    out.table("theory_difference_g" + tag, g.theory_difference, "theory_difference", g.gamma);
    gammas.push_back({{"gamma", g.gamma}, {"alpha", g.alpha ? json(*g.alpha) : json(nullptr)}});
  }
  json manifest = base_manifest(config, "simulate");
  manifest["gammas"] = gammas;
  finish_manifest(out, manifest, started);
  return {out.files};
}

CommandResult cmd_theory(const CliConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  if (!config.theory) {
    throw ConfigError("theory needs kernel input: set theory.kernels_from or theory.fresh");
  }
  cmd_validate(config);
  Output out = open_output(config);
  const auto& gammas = config.experiment.gamma_list;

  FidelityCurve f, kernel;
  json manifest = base_manifest(config, "theory");
  if (config.theory->kernels_from) {
    const fs::path dir = *config.theory->kernels_from;
    f = read_table(find_table(dir, "f_lambda", config.format));
    kernel = read_table(find_table(dir, "kernel", config.format));
    if (!(f.grid == kernel.grid)) throw ConfigError("f_lambda and kernel tables differ in grid");
    manifest["kernels_from"] = dir.string();
  } else {
    harness::ExperimentConfig e = config.experiment;
    e.gamma_list.clear();
    const auto report = harness::run_ensemble(e);
    f = report.fidelity;
    kernel = report.kernel;
    manifest["kernels_from"] = nullptr;
  }
  check_theory_steps(gammas, f.grid.dt);
  if (std::abs(kernel.values.front() - 1.0) > 1e-12) {
    throw ConfigError("kernel table must start at 1");
  }

  const FidelityCurve f_plain{f.grid, f.values, std::nullopt};
  const FidelityCurve k_plain{kernel.grid, kernel.values, std::nullopt};
  out.table("f_lambda", f, "f_lambda");
  out.table("kernel", kernel, "kernel");
  json listed = json::array();
  for (double g : gammas) {
    const std::string tag = gamma_tag(g);
    const FidelityCurve phi = volterra::solve({f_plain, k_plain, g});
    const FidelityCurve th = volterra::generalized_fidelity(phi, g);
    out.table("phi_g" + tag, phi, "phi", g);
    out.table("theory_g" + tag, th, "theory", g);
    out.table("theory_difference_g" + tag, harness::difference_curve(th, f_plain),
              "theory_difference", g);
    out.table("first_order_g" + tag, volterra::first_order(f_plain, k_plain, g), "first_order", g);
    listed.push_back({{"gamma", g},
                      {"alpha", config.experiment.lambda != 0.0
                                    ? json(g / config.experiment.lambda)
                                    : json(nullptr)}});
  }
  manifest["gammas"] = listed;
  finish_manifest(out, manifest, started);
  return {out.files};
}

CommandResult cmd_general(const CliConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  if (!config.general) throw ConfigError("general needs a 'general' section");
  cmd_validate(config);
  Output out = open_output(config);
  const GeneralOptions& opts = *config.general;
  const auto& e = config.experiment;
  const Index dim = e.ensemble.dim;

  master::PropagationMethod how = master::PropagationMethod::automatic;
  if (e.method == harness::SimulationMethod::superoperator) how = master::PropagationMethod::superoperator;
  if (e.method == harness::SimulationMethod::stepper) how = master::PropagationMethod::stepper;
  master::PropagationOptions popts;
  popts.max_superoperator_dim = e.max_superoperator_dim;

  const rmt::Realization realization = rmt::build_realization(e.ensemble);
  const echo::EchoSystem system(realization, e.lambda);
  const Eigen::MatrixXcd rho0 = e.initial_state ? *e.initial_state : echo::maximally_mixed(dim);
  const master::CorrelationKernel kernel =
      opts.kernel == GeneralOptions::Kernel::delta
          ? master::CorrelationKernel::delta(opts.c0)
          : master::CorrelationKernel::exponential_with_area(opts.c0, opts.tau_c);

  const Index draws = opts.coupling_matrix ? 1 : opts.n_draws;
  std::vector<FidelityCurve> traces(static_cast<std::size_t>(draws));
  std::atomic<Index> next{0};
  std::mutex failure_mutex;
  std::exception_ptr failure;
  auto worker = [&] {
    for (Index d = next++; d < draws; d = next++) {
      try {
        Eigen::MatrixXcd coupling;
        if (opts.coupling_matrix) {
          coupling = *opts.coupling_matrix;
        } else {
          auto stream = rng::make_stream(e.ensemble.master_seed, static_cast<std::uint64_t>(d),
                                         "coupling");
          coupling = rmt::sample_gaussian(dim, opts.coupling_beta, stream);
        }
        const auto gen = master::general_generator(system.perturbed(), system.unperturbed(),
                                                   coupling, kernel, opts.coupling_strength);
        traces[static_cast<std::size_t>(d)] =
            master::trace_curve(master::propagate(gen, rho0, e.grid, how, popts));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = draws;
        return;
      }
    }
  };
  {
    const unsigned n = static_cast<unsigned>(std::clamp<Index>(e.threads, 1, draws));
    std::vector<std::jthread> pool;
    for (unsigned i = 1; i < n; ++i) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);

  const double rate = opts.coupling_strength * opts.coupling_strength * static_cast<double>(dim) *
                      opts.c0;
  const auto reference = master::trace_curve(master::propagate(
      master::rmt_generator(system.perturbed(), system.unperturbed(), rate), rho0, e.grid, how,
      popts));

  out.table("general_trace", harness::mean_with_error(traces), "general_trace");
  out.table("rmt_reference", reference, "rmt_reference", rate);
  out.table("closed_fidelity", system.fidelity_curve(rho0, e.grid), "closed_fidelity");
  json manifest = base_manifest(config, "general");
  manifest["kernel"] = opts.kernel == GeneralOptions::Kernel::delta ? "delta" : "exponential";
  manifest["c0"] = opts.c0;
  manifest["tau_c"] = opts.tau_c;
  manifest["coupling_strength"] = opts.coupling_strength;
  manifest["n_draws"] = draws;
  manifest["reference_rate"] = rate;
  finish_manifest(out, manifest, started);
  return {out.files};
}

int exit_code_for(const std::exception& error) {
  if (dynamic_cast<const IoError*>(&error)) return kIoError;
  if (dynamic_cast<const ConfigError*>(&error) || dynamic_cast<const InvalidArgument*>(&error) ||
      dynamic_cast<const ShapeError*>(&error) || dynamic_cast<const ResourceError*>(&error) ||
      dynamic_cast<const json::exception*>(&error)) {
    return kConfigError;
  }
  if (dynamic_cast<const fs::filesystem_error*>(&error)) return kIoError;
  return kNumericError;
}

}  // namespace echogfa::cli
