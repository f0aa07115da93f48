// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cfmimo/channel.hpp"
#include "cfmimo/config.hpp"

namespace cfmimo::cli {

/// Process exit codes of the `cfmimo` tool.
enum ExitCode : int {
  kOk = 0,
  kUsageError = 1,
  kConfigError = 2,
  kRuntimeError = 3,
  kOracleMismatch = 4,
};

/// Files written by cmd_run, relative to the output directory.
struct RunOutputs {
  std::vector<std::filesystem::path> files;
  CampaignSummary summary;
};

/// Runs the campaign and writes results.csv, summary.json and
/// cdf_{se,ee}_{algorithm}_{combiner}.csv. Files already written are removed on failure.
RunOutputs cmd_run(const CliConfig& config, const std::filesystem::path& out_dir, int workers);

std::string cdf_file_name(const std::string& metric, const std::string& algorithm, CombinerKind combiner);

struct OracleTolerance {
  /// Allowed min-SE shortfall against the grid, bits/s/Hz.
  double se_abs = 1e-2;
  /// Allowed relative min-EE shortfall against the grid.
  double ee_rel = 1e-2;
};

struct OracleCase {
  int instance = 0;
  CombinerKind combiner = CombinerKind::MR;
  std::string objective;
  double oracle = 0.0;
  double solver = 0.0;
  /// Oracle minus solver (min-SE) or its relative form (min-EE); positive means the solver is worse.
  double gap = 0.0;
  bool pass = false;
};

struct OracleReport {
  std::vector<OracleCase> cases;
  bool all_pass() const;
};

/// Compares max-min SE and max-min EE against the brute-force grid on `instances`
/// drops generated from the configuration. Needs K <= 3.
OracleReport cmd_oracle(const CliConfig& config, int instances, int grid_points, const OracleTolerance& tol);
void print_oracle_report(std::ostream& out, const OracleReport& report);

PathLossFit cmd_fit(const std::filesystem::path& dataset_path, double reference_distance = 0.0);

/// Synthesizes a dataset from drop 0 of the configured scenario.
MeasuredDataset cmd_synth(const CliConfig& config, int frequencies, bool fading);

/// Entry point shared by the tool binary and tests.
int main(int argc, char** argv);

}  // namespace cfmimo::cli
