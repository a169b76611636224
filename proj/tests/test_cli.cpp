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

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <map>
#include <string>

#include "doctest.h"
#include "support.hpp"

#include "echogfa/cli.hpp"

using namespace echogfa;
namespace fs = std::filesystem;
using echogfa::test::max_abs_deviation;
using echogfa::test::max_abs_diff;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() /
                     ("echo_gfa_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const char* kSmall = R"({
  "dim": 6, "beta": 1, "master_seed": 9, "lambda": 0.1,
  "gamma_list": [0, 0.00195, 0.1], "dt": 0.05, "t_max": 6,
  "n_run": 8, "n_batch": 3, "method": "volterra"
})";

cli::CliConfig small(const fs::path& out) {
  auto c = cli::parse_config(kSmall);
  c.output_dir = out;
  return c;
}

int run_tool(const std::string& args) {
  const std::string cmd = std::string(ECHO_GFA_EXE) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("configuration parsing") {
  const auto c = cli::parse_config(kSmall);
  CHECK(c.experiment.ensemble.dim == 6);
  CHECK(c.experiment.ensemble.master_seed == 9);
  CHECK(c.experiment.grid.points == 121);
  CHECK(c.experiment.grid.dt == 0.05);
  CHECK(c.experiment.gamma_list.size() == 3);
  CHECK(c.experiment.method == harness::SimulationMethod::volterra);
  CHECK(c.format == cli::OutputFormat::csv);
  CHECK_FALSE(c.theory.has_value());

  const auto full = cli::parse_config(R"({
    "dim": 3, "lambda": 0, "dt": 0.1, "t_max": 1, "master_seed": 18446744073709551615,
    "initial_state": [[1, 0, 0], [0, 0, 0], [0, 0, 0]], "format": "json",
    "theory": {"kernels_from": "somewhere"},
    "general": {"kernel": "exponential", "c0": 2, "tau_c": 0.01, "coupling_strength": 0.1,
                "coupling_beta": 1, "n_draws": 5,
                "coupling_matrix": [[1, [0, 1], 0], [[0, -1], 2, 0], [0, 0, 3]]}})");
  CHECK(full.experiment.ensemble.master_seed == 18446744073709551615ULL);
  CHECK(full.experiment.initial_state->rows() == 3);
  CHECK(full.format == cli::OutputFormat::json);
  CHECK(full.theory->kernels_from->string() == "somewhere");
  CHECK(full.general->kernel == cli::GeneralOptions::Kernel::exponential);
  CHECK((*full.general->coupling_matrix)(0, 1) == Complex(0.0, 1.0));
}

TEST_CASE("configuration errors are explicit") {
  auto rejects = [](const std::string& text, const std::string& fragment) {
    try {
      cli::parse_config(text);
    } catch (const cli::ConfigError& e) {
      CHECK_MESSAGE(std::string(e.what()).find(fragment) != std::string::npos, e.what());
      return;
    }
    FAIL("accepted: " << text);
  };
  rejects(R"({"dim": 4, "lambda": 0, "dt": 0.1, "t_max": 1, "colour": 1})", "colour");
  rejects(R"({"dim": 4, "lambda": 0, "dt": 0.1})", "t_max");
  rejects(R"({"dim": 1, "lambda": 0, "dt": 0.1, "t_max": 1})", "dim");
  rejects(R"({"dim": 4.5, "lambda": 0, "dt": 0.1, "t_max": 1})", "dim");
  rejects(R"({"dim": 4, "beta": 3, "lambda": 0, "dt": 0.1, "t_max": 1})", "beta");
  rejects(R"({"dim": 4, "lambda": "x", "dt": 0.1, "t_max": 1})", "lambda");
  rejects(R"({"dim": 4, "lambda": 0, "dt": 0.1, "t_max": 1.05})", "t_max");
  rejects(R"({"dim": 4, "lambda": 0, "dt": -0.1, "t_max": 1})", "dt");
  rejects(R"({"dim": 4, "lambda": 0, "dt": 0.1, "t_max": 1, "gamma_list": [-1]})", "gamma_list");
  rejects(R"({"dim": 4, "lambda": 0, "dt": 0.1, "t_max": 1, "gamma_list": [1, 1]})", "duplicate");
  rejects(R"({"dim": 4, "lambda": 0, "dt": 0.1, "t_max": 1, "method": "exact"})", "method");
  rejects(R"({"dim": 4, "lambda": 0, "dt": 0.1, "t_max": 1, "format": "xml"})", "format");
  rejects(R"({"dim": 4, "lambda": 0, "dt": 0.1, "t_max": 1, "master_seed": -1})", "master_seed");
  rejects(R"({"dim": 4, "lambda": 0, "dt": 0.1, "t_max": 1, "theory": {}})", "theory");
  rejects(R"({"dim": 4, "lambda": 0, "dt": 0.1, "t_max": 1, "general": {"kernel": "gauss"}})",
          "general.kernel");
  rejects(R"({"dim": 4, "lambda": 0, "dt": 0.1, "t_max": 1, "general": {"kernel": "exponential"}})",
          "tau_c");
  rejects(R"({"dim": 2, "lambda": 0, "dt": 0.1, "t_max": 1, "general": {"coupling_matrix": [[0, 1], [0, 0]]}})",
          "Hermitian");
  rejects("[1, 2]", "object");
  rejects("{", "JSON");

  auto c = cli::parse_config(R"({"dim": 80, "lambda": 0, "dt": 0.1, "t_max": 1, "method": "superoperator"})");
  CHECK_THROWS_AS(cli::cmd_validate(c), cli::ConfigError);
  c = cli::parse_config(R"({"dim": 4, "lambda": 0, "dt": 1, "t_max": 4, "gamma_list": [5]})");
  c.experiment.method = harness::SimulationMethod::volterra;
  CHECK_THROWS_AS(cli::cmd_validate(c), cli::ConfigError);
}

TEST_CASE("tables round-trip exactly") {
  FidelityCurve c = FidelityCurve::constant(TimeGrid::uniform(0.013, 50), 0.0);
  for (std::size_t i = 0; i < c.values.size(); ++i) {
    c.values[i] = Complex(std::sin(1.0 + i) / 3.0, -std::exp(-0.1 * i) * 1e-20);
  }
  c.values[3] = Complex(-0.0, 1e300);
  for (auto format : {cli::OutputFormat::csv, cli::OutputFormat::json}) {
    const auto back = cli::parse_table(cli::format_table(c, format), format);
    CHECK(back.grid == c.grid);
    CHECK(back.values == c.values);
    CHECK_FALSE(back.error.has_value());

    FidelityCurve e = c;
    e.error = std::vector<Complex>(c.values.size(), Complex(1.0 / 7.0, 2.0 / 9.0));
    (*e.error)[4] = Complex(std::numeric_limits<double>::quiet_NaN(), 0.5);
    const auto back_e = cli::parse_table(cli::format_table(e, format), format);
    REQUIRE(back_e.error.has_value());
    CHECK((*back_e.error)[0] == (*e.error)[0]);
    CHECK(std::isnan((*back_e.error)[4].real()));
    CHECK((*back_e.error)[4].imag() == 0.5);
  }
  const std::string text = cli::format_table(c, cli::OutputFormat::csv);
  CHECK(text.rfind("t,re_f,im_f,re_err,im_err\n0.0000000000000000e+00,", 0) == 0);
  CHECK(text.find(",nan,nan\n") != std::string::npos);
  CHECK_THROWS_AS(cli::parse_table("t,f\n0,1\n", cli::OutputFormat::csv), cli::ConfigError);
  CHECK_THROWS_AS(cli::parse_table("t,re_f,im_f,re_err,im_err\n0,1,0,nan\n", cli::OutputFormat::csv),
                  cli::ConfigError);
}

TEST_CASE("gamma tags are shortest round-trip spellings") {
  CHECK(cli::gamma_tag(0.077) == "0.077");
  CHECK(cli::gamma_tag(0.00195) == "0.00195");
  CHECK(cli::gamma_tag(0.0) == "0");
}

TEST_CASE("simulate without perturbation emits ones") {
  auto c = small(scratch("lambda0"));
  c.experiment.lambda = 0.0;
  const auto result = cli::cmd_simulate(c);
  CHECK(result.files.size() == 2 + 4 * 3);
  CHECK(fs::exists(c.output_dir / "manifest.json"));
  // The Volterra step leaves exp(-Gamma t) r^n with r = (1 + Gamma dt/2) / (1 - Gamma dt/2).
  const std::map<std::string, double> rates = {{"0", 0.0}, {"0.00195", 0.00195}, {"0.1", 0.1}};
  for (const auto& f : result.files) {
    const auto curve = cli::read_table(f);
    const std::string name = f.stem().string();
    const bool difference = name.find("difference") != std::string::npos;
    const auto tag = name.find("_g");
    const double g = tag == std::string::npos ? 0.0 : rates.at(name.substr(tag + 2));
    const double r = (1.0 + 0.5 * g * curve.grid.dt) / (1.0 - 0.5 * g * curve.grid.dt);
    double worst = 0.0;
    for (Index i = 0; i < curve.size(); ++i) {
      const double expected = std::exp(-g * curve.grid.time(i)) * std::pow(r, static_cast<double>(i));
      worst = std::max(worst, std::abs(curve[i] - (difference ? expected - 1.0 : expected)));
    }
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("simulate is byte-reproducible across runs and worker counts") {
  auto a = small(scratch("det_a"));
  auto b = small(scratch("det_b"));
  b.experiment.threads = 3;
  const auto ra = cli::cmd_simulate(a);
  const auto rb = cli::cmd_simulate(b);
  REQUIRE(ra.files.size() == rb.files.size());
  for (std::size_t i = 0; i < ra.files.size(); ++i) {
    CHECK(ra.files[i].filename() == rb.files[i].filename());
    CHECK(cli::read_text(ra.files[i]) == cli::read_text(rb.files[i]));
  }
}

TEST_CASE("theory from prior simulate output") {
  const fs::path sim = scratch("theory_sim");
  const fs::path out = scratch("theory_out");
  auto c = small(sim);
  cli::cmd_simulate(c);

  c.output_dir = out;
  c.theory = cli::TheoryOptions{sim, false};
  const auto result = cli::cmd_theory(c);
  CHECK(result.files.size() == 2 + 4 * 3);

  const auto f = cli::read_table(sim / "f_lambda.csv");
  const auto th0 = cli::read_table(out / "theory_g0.csv");
  CHECK(th0.values == f.values);

  auto first_order_gap = [&](const std::string& tag) {
    return max_abs_diff(cli::read_table(out / ("theory_g" + tag + ".csv")),
                        cli::read_table(out / ("first_order_g" + tag + ".csv")));
  };
  CHECK(first_order_gap("0.00195") < first_order_gap("0.1"));

  // The simulate run computed the same theory from the same averaged kernels.
  const auto sim_theory = cli::read_table(sim / "theory_g0.1.csv");
  CHECK(max_abs_diff(sim_theory, cli::read_table(out / "theory_g0.1.csv")) == 0.0);
}

TEST_CASE("theory without kernel input is a configuration error") {
  auto c = small(scratch("theory_missing"));
  CHECK_THROWS_AS(cli::cmd_theory(c), cli::ConfigError);
  c.theory = cli::TheoryOptions{scratch("empty"), false};
  CHECK_THROWS_AS(cli::cmd_theory(c), cli::ConfigError);
}

TEST_CASE("theory with fresh kernels") {
  auto c = small(scratch("theory_fresh"));
  c.format = cli::OutputFormat::json;
  c.theory = cli::TheoryOptions{std::nullopt, true};
  const auto result = cli::cmd_theory(c);
  CHECK(result.files.size() == 2 + 4 * 3);
  CHECK(fs::exists(c.output_dir / "theory_g0.1.json"));
}

TEST_CASE("general command limits") {
  auto base = cli::parse_config(R"({
    "dim": 4, "beta": 2, "master_seed": 3, "lambda": 0.1, "dt": 0.1, "t_max": 5,
    "general": {"kernel": "delta", "c0": 1, "coupling_strength": 0.0, "n_draws": 2}})");

  SUBCASE("no coupling gives the closed-system fidelity") {
    base.output_dir = scratch("general_closed");
    cli::cmd_general(base);
    CHECK(max_abs_diff(cli::read_table(base.output_dir / "general_trace.csv"),
                       cli::read_table(base.output_dir / "closed_fidelity.csv")) < 1e-9);
  }
  SUBCASE("averaging over couplings approaches the rmt equation") {
    base.general->coupling_strength = 0.1;
    base.general->n_draws = 1000;
    base.experiment.threads = 2;
    base.output_dir = scratch("general_avg");
    cli::cmd_general(base);
    const auto avg = cli::read_table(base.output_dir / "general_trace.csv");
    const auto ref = cli::read_table(base.output_dir / "rmt_reference.csv");
    const auto closed = cli::read_table(base.output_dir / "closed_fidelity.csv");
    const double gap = max_abs_diff(avg, ref);
    const double effect = max_abs_diff(closed, ref);
    MESSAGE("average vs rmt " << gap << ", size of the decay effect " << effect);
    CHECK(gap < 0.1 * effect);
  }
  SUBCASE("short exponential kernel converges to the delta kernel") {
    base.general->coupling_strength = 0.3;
    const fs::path delta_dir = scratch("general_delta");
    base.output_dir = delta_dir;
    cli::cmd_general(base);
    base.general->kernel = cli::GeneralOptions::Kernel::exponential;
    base.general->tau_c = 1e-3;
    base.output_dir = scratch("general_exp");
    cli::cmd_general(base);
    CHECK(max_abs_diff(cli::read_table(delta_dir / "general_trace.csv"),
                       cli::read_table(base.output_dir / "general_trace.csv")) < 1e-3);
  }
  SUBCASE("volterra has no general form") {
    base.experiment.method = harness::SimulationMethod::volterra;
    CHECK_THROWS_AS(cli::cmd_general(base), cli::ConfigError);
  }
}

TEST_CASE("exit codes") {
  CHECK(cli::exit_code_for(cli::ConfigError("x")) == 2);
  CHECK(cli::exit_code_for(InvalidRate("x")) == 2);
  CHECK(cli::exit_code_for(ResourceError("x")) == 2);
  CHECK(cli::exit_code_for(cli::IoError("x")) == 3);
  CHECK(cli::exit_code_for(NumericError("x")) == 4);
  CHECK(cli::exit_code_for(QuadratureError("x")) == 4);

  const fs::path dir = scratch("exit");
  cli::write_text(dir / "ok.json", kSmall);
  cli::write_text(dir / "bad.json", R"({"dim": 4, "lambda": 0, "dt": 0.1, "t_max": 1, "typo": 2})");
  cli::write_text(dir / "theory.json", R"({"dim": 4, "lambda": 0, "dt": 0.1, "t_max": 1})");
  CHECK(run_tool("validate-config --config " + (dir / "ok.json").string()) == 0);
  CHECK(run_tool("simulate --config " + (dir / "ok.json").string() + " --out " +
                 (dir / "run").string() + " --threads 2 --seed 5") == 0);
  CHECK(fs::exists(dir / "run" / "manifest.json"));
  CHECK(run_tool("simulate --config " + (dir / "bad.json").string()) == 2);
  CHECK(run_tool("theory --config " + (dir / "theory.json").string() + " --out " +
                 (dir / "t").string()) == 2);
  CHECK(run_tool("simulate --config " + (dir / "missing.json").string()) == 3);
  CHECK(run_tool("simulate --config " + (dir / "ok.json").string() + " --out /proc/none") == 3);
  CHECK(run_tool("simulate --config " + (dir / "ok.json").string() + " --format xml") == 2);
  CHECK(run_tool("frobnicate") == 2);
  CHECK(run_tool("simulate --config " + (dir / "ok.json").string() + " --out " +
                 (dir / "env").string() + " --threads 0") == 2);
}

TEST_CASE("thread count from the environment") {
  const fs::path dir = scratch("env");
  cli::write_text(dir / "ok.json", kSmall);
  const std::string args = "validate-config --config " + (dir / "ok.json").string();
  ::setenv("ECHO_GFA_THREADS", "nope", 1);
  CHECK(run_tool(args) == 2);
  ::setenv("ECHO_GFA_THREADS", "2", 1);
  CHECK(run_tool(args) == 0);
  ::unsetenv("ECHO_GFA_THREADS");
}

TEST_CASE("shipped presets are valid") {
  for (const char* name : {"fig1.json", "fig2.json"}) {
    const auto c = cli::load_config(fs::path(PRESET_DIR) / name);
    CHECK_NOTHROW(cli::cmd_validate(c));
    CHECK(c.experiment.ensemble.dim == 50);
    CHECK(c.experiment.n_run == 1000);
    CHECK(c.experiment.n_batch == 3);
    CHECK(c.experiment.gamma_list.size() == 4);
  }
}
