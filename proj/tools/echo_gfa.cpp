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

// echo_gfa: command-line front end for the ensemble, theory and general
// master-equation runs. Exit codes: 0 ok, 2 configuration, 3 I/O, 4 numerics.

#include <cstdint>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "echogfa/cli.hpp"

namespace {

using namespace echogfa;

struct Flags {
  std::string config;
  std::string out;
  std::string format;
  std::optional<unsigned> threads;
  std::optional<std::uint64_t> seed;
};

unsigned threads_from_env() {
  const char* env = std::getenv("ECHO_GFA_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const unsigned long n = std::strtoul(env, &end, 10);
  if (*end != '\0' || n == 0 || n > 4096) {
    throw cli::ConfigError(std::string("ECHO_GFA_THREADS must be a positive integer, got '") +
                           env + "'");
  }
  return static_cast<unsigned>(n);
}

cli::CliConfig resolve(const Flags& flags) {
  cli::CliConfig config = cli::load_config(flags.config);
  if (!flags.out.empty()) config.output_dir = flags.out;
  if (!flags.format.empty()) config.format = cli::output_format_from_string(flags.format);
  if (flags.seed) config.experiment.ensemble.master_seed = *flags.seed;
  config.experiment.threads = flags.threads ? *flags.threads : threads_from_env();
  return config;
}

void report_files(const cli::CommandResult& result) {
  for (const auto& f : result.files) std::cout << f.string() << '\n';
}

void progress(Index done, Index total) {
  const Index step = std::max<Index>(1, total / 10);
  if (done % step == 0 || done == total) {
    std::cerr << "  " << done << "/" << total << " blocks\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalized fidelity amplitude: ensembles, integral-equation theory and "
               "echo master equations"};
  app.require_subcommand(1);
  Flags flags;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "JSON configuration file")->required();
    sub->add_option("--out", flags.out, "output directory (overrides output_dir)");
    sub->add_option("--format", flags.format, "csv or json (overrides format)")
        ->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--threads", flags.threads,
                    "worker threads; speed only, never results (default: ECHO_GFA_THREADS or 1)")
        ->check(CLI::Range(1u, 4096u));
    sub->add_option("--seed", flags.seed, "master seed (overrides master_seed)");
  };
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo ensemble with theory curves");
  auto* theory = app.add_subcommand("theory", "integral-equation curves from averaged kernels");
  auto* general = app.add_subcommand("general", "general Born-Markov echo master equation");
  auto* check = app.add_subcommand("validate-config", "check a configuration and exit");
  for (auto* sub : {simulate, theory, general, check}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kConfigError;
  }

  try {
    const cli::CliConfig config = resolve(flags);
    if (simulate->parsed()) {
      report_files(cli::cmd_simulate(config, progress));
    } else if (theory->parsed()) {
      report_files(cli::cmd_theory(config));
    } else if (general->parsed()) {
      report_files(cli::cmd_general(config));
    } else {
      cli::cmd_validate(config);
      std::cout << "configuration ok (hash " << harness::config_fingerprint(config.experiment)
                << ")\n";
    }
  } catch (const std::exception& e) {
    const int code = cli::exit_code_for(e);
    std::cerr << "echo_gfa: error: " << e.what() << '\n';
    return code;
  }
  return cli::kSuccess;
}
