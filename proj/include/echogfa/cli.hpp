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

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "echogfa/curve.hpp"
#include "echogfa/error.hpp"
#include "echogfa/harness.hpp"

namespace echogfa::cli {

/// Malformed or inconsistent configuration (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Failure to read or write a file (exit code 3).
class IoError : public Error {
 public:
  using Error::Error;
};

enum class OutputFormat { csv, json };

enum ExitCode : int { kSuccess = 0, kConfigError = 2, kIoError = 3, kNumericError = 4 };

struct TheoryOptions {
  /// Directory holding f_lambda and kernel tables from an earlier simulate run.
  std::optional<std::filesystem::path> kernels_from;
  /// Sample the averaged kernels from the ensemble instead.
  bool fresh = false;
};

struct GeneralOptions {
  enum class Kernel { delta, exponential };
  Kernel kernel = Kernel::delta;
  double c0 = 1.0;        ///< area under C(s)
  double tau_c = 0.0;     ///< decay time of the exponential kernel
  double coupling_strength = 0.0;  ///< gamma
  rmt::SymmetryClass coupling_beta = rmt::SymmetryClass::unitary;
  Index n_draws = 1;
  /// Fixed V'; when present no couplings are sampled.
  std::optional<Eigen::MatrixXcd> coupling_matrix;
};

struct CliConfig {
  harness::ExperimentConfig experiment;
  std::filesystem::path output_dir = "out";
  OutputFormat format = OutputFormat::csv;
  std::optional<TheoryOptions> theory;
  std::optional<GeneralOptions> general;
};

/// Parse a configuration document. Unknown keys, wrong types and values out
/// of range throw ConfigError naming the offending key.
CliConfig parse_config(const std::string& json_text);
CliConfig load_config(const std::filesystem::path& path);

/// Full validation of the experiment part; every failure becomes ConfigError.
void validate(const CliConfig& config);

OutputFormat output_format_from_string(const std::string& name);
std::string extension(OutputFormat format);

/// Header `t,re_f,im_f,re_err,im_err`, values as %.16e, `nan` for a missing error.
std::string format_table(const FidelityCurve& curve, OutputFormat format);
/// Inverse of format_table. Throws ConfigError on malformed content.
FidelityCurve parse_table(const std::string& text, OutputFormat format);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

FidelityCurve read_table(const std::filesystem::path& path);

/// Shortest round-trip spelling of Gamma used in file names.
std::string gamma_tag(double gamma);

struct CommandResult {
  std::vector<std::filesystem::path> files;  ///< data files, manifest excluded
};

CommandResult cmd_simulate(const CliConfig& config,
                           const harness::ProgressCallback& progress = {});
CommandResult cmd_theory(const CliConfig& config);
CommandResult cmd_general(const CliConfig& config);
/// Throws ConfigError when the configuration is unusable; writes nothing.
void cmd_validate(const CliConfig& config);

/// Map an in-flight exception to the exit-code contract.
int exit_code_for(const std::exception& error);

}  // namespace echogfa::cli
