// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/cli.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>

#include "cfmimo/tpc.hpp"

namespace cfmimo::cli {

namespace {

class OutputFiles {
 public:
  explicit OutputFiles(std::filesystem::path dir) : dir_(std::move(dir)) {}
  OutputFiles(const OutputFiles&) = delete;
  OutputFiles& operator=(const OutputFiles&) = delete;
  ~OutputFiles() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& f : written_) std::filesystem::remove(dir_ / f, ec);
  }

  template <typename Writer>
  void write(const std::filesystem::path& name, Writer&& writer) {
    written_.push_back(name);
    std::ofstream out(dir_ / name, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + (dir_ / name).string() + "'");
    writer(out);
    out.close();
    if (!out) throw std::runtime_error("failed writing '" + (dir_ / name).string() + "'");
  }

  std::vector<std::filesystem::path> commit() {
    committed_ = true;
    return written_;
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> written_;
  bool committed_ = false;
};

}  // namespace

std::string cdf_file_name(const std::string& metric, const std::string& algorithm, CombinerKind combiner) {
  return "cdf_" + metric + "_" + algorithm + "_" + to_string(combiner) + ".csv";
}

RunOutputs cmd_run(const CliConfig& config, const std::filesystem::path& out_dir, int workers) {
  const CampaignSpec& spec = config.campaign;
  const CampaignResult result = run_campaign(spec, workers);

  std::filesystem::create_directories(out_dir);
  OutputFiles files(out_dir);
  files.write("results.csv", [&](std::ostream& o) { write_results_csv(o, result.rows); });
  files.write("summary.json", [&](std::ostream& o) { o << summary_to_json(result.summary).dump(2) << '\n'; });
  for (const auto& alg : spec.algorithms) {
    for (const auto kind : spec.combiners) {
      std::vector<double> se, ee;
      for (const auto& r : result.rows)
        if (r.algorithm == alg.display_name() && r.combiner == kind) {
          se.push_back(r.se);
          ee.push_back(r.ee);
        }
      if (se.empty()) continue;
      files.write(cdf_file_name("se", alg.display_name(), kind), [&](std::ostream& o) { write_cdf_csv(o, cdf(se)); });
      files.write(cdf_file_name("ee", alg.display_name(), kind), [&](std::ostream& o) { write_cdf_csv(o, cdf(ee)); });
    }
  }
  return {files.commit(), result.summary};
}

bool OracleReport::all_pass() const {
  for (const auto& c : cases)
    if (!c.pass) return false;
  return true;
}

OracleReport cmd_oracle(const CliConfig& config, int instances, int grid_points, const OracleTolerance& tol) {
  const CampaignSpec& spec = config.campaign;
  if (spec.K > 3) throw TooManyUEs("oracle comparison supports at most 3 UEs");
  std::unique_ptr<MeasuredDataset> dataset;
  if (spec.source == ChannelSource::Measured)
    dataset = std::make_unique<MeasuredDataset>(load_measured(spec.measured_path));

  const double rho = transmit_snr(spec.system);
  // The grid holds the weights at q = 1, so the solver does too.
  TpcOptions opts = spec.tpc;
  opts.alternations = 1;
  OracleReport report;
  for (int i = 0; i < instances; ++i) {
    const auto real = generate_drop(spec, i, dataset.get()).front();
    for (const auto kind : spec.combiners) {
      const CMatrixXd W = combiner_weights(kind, real.H_hat, real.err_var, VectorXd::Ones(real.H_hat.cols()), rho);
      const LinkGains<double> gains = link_gains(W, real.H_hat, real.err_var);
      auto at_fixed_weights = [&](const VectorXd& q) { return link_metrics(gains, q, rho, spec.system); };

      const TpcResult se = max_min_se(real.H_hat, real.err_var, rho, kind, spec.system, opts);
      const OracleResult se_grid = brute_force_oracle(real.H_hat, real.err_var, rho, kind, OracleObjective::MinSe,
                                                      0.0, grid_points, spec.system);
      OracleCase c{i, kind, "min_se", se_grid.objective, at_fixed_weights(se.q).se.minCoeff(), 0.0, false};
      c.gap = c.oracle - c.solver;
      c.pass = c.gap <= tol.se_abs;
      report.cases.push_back(c);

      const TpcResult ee = max_min_ee(real.H_hat, real.err_var, rho, kind, spec.system, opts);
      const OracleResult ee_grid = brute_force_oracle(real.H_hat, real.err_var, rho, kind, OracleObjective::MinEe,
                                                      opts.target_se, grid_points, spec.system);
      OracleCase d{i, kind, "min_ee", ee_grid.objective, at_fixed_weights(ee.q).ee.minCoeff(), 0.0, false};
      const bool solver_ok = ee.status == TpcStatus::Optimal;
      if (!ee_grid.feasible) {
        // The grid may miss a thin feasible region; an infeasible solver must agree.
        d.pass = true;
      } else if (!solver_ok) {
        d.gap = 1.0;
        d.pass = false;
      } else {
        d.gap = (d.oracle - d.solver) / d.oracle;
        d.pass = d.gap <= tol.ee_rel;
      }
      report.cases.push_back(d);
    }
  }
  return report;
}

void print_oracle_report(std::ostream& out, const OracleReport& report) {
  out << std::left << std::setw(9) << "instance" << std::setw(9) << "combiner" << std::setw(9) << "metric"
      << std::setw(16) << "oracle" << std::setw(16) << "solver" << std::setw(14) << "gap" << ' '
      << "result\n";
  out << std::setprecision(8);
  std::size_t failed = 0;
  for (const auto& c : report.cases) {
    out << std::setw(9) << c.instance << std::setw(9) << to_string(c.combiner) << std::setw(9) << c.objective
        << std::setw(16) << c.oracle << std::setw(16) << c.solver << std::setw(14) << c.gap << ' '
        << (c.pass ? "pass" : "FAIL") << '\n';
    if (!c.pass) ++failed;
  }
  out << (failed == 0 ? "all " + std::to_string(report.cases.size()) + " comparisons passed"
                      : std::to_string(failed) + " of " + std::to_string(report.cases.size()) + " comparisons failed")
      << '\n';
}

PathLossFit cmd_fit(const std::filesystem::path& dataset_path, double reference_distance) {
  return fit_path_loss(load_measured(dataset_path), reference_distance);
}

MeasuredDataset cmd_synth(const CliConfig& config, int frequencies, bool fading) {
  const CampaignSpec& spec = config.campaign;
  Rng rng(drop_seed(spec.base_seed, 0));
  Topology topo = place_aps(spec.area, spec.L, spec.N, spec.ap_placement, spec.min_antenna_spacing, rng);
  topo.ues = place_ues(spec.area, spec.K, spec.ue_placement, spec.cluster_radius, spec.indoor_fraction, rng);
  return synthesize_dataset(topo, spec.path_loss, frequencies, fading, rng, spec.indoor_penalty_db);
}

namespace {

struct CommonFlags {
  std::string config_path;
  std::string profile = "desk";
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "Configuration file (JSON, comments allowed)");
  cmd->add_option("--profile", flags.profile, "Built-in defaults the config is applied on")
      ->check(CLI::IsMember({"paper", "desk"}));
  cmd->add_option("--seed", flags.seed, "Overrides campaign.base_seed");
}

CliConfig resolve(const CommonFlags& flags) {
  const Profile profile = profile_from_string(flags.profile);
  CliConfig cfg = flags.config_path.empty() ? default_config(profile) : load_config(flags.config_path, profile);
  if (flags.seed) cfg.campaign.base_seed = *flags.seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Uplink cell-free massive MIMO power-control laboratory"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  std::string out_dir;
  int workers = 1;
  auto* run = app.add_subcommand("run", "Run a Monte-Carlo campaign and write results, summary and CDFs");
  add_common(run, run_flags);
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--workers", workers, "Worker threads")->envname("CFMIMO_WORKERS")->check(CLI::PositiveNumber);

  CommonFlags oracle_flags;
  int instances = 20;
  int grid = 201;
  OracleTolerance tol;
  auto* oracle = app.add_subcommand("oracle", "Compare the solvers with brute-force grid search (K <= 3)");
  add_common(oracle, oracle_flags);
  oracle->add_option("--instances", instances, "Random instances")->check(CLI::PositiveNumber);
  oracle->add_option("--grid", grid, "Grid points per axis")->check(CLI::Range(2, 100000));
  oracle->add_option("--se-tolerance", tol.se_abs, "Allowed min-SE shortfall, bits/s/Hz");
  oracle->add_option("--ee-tolerance", tol.ee_rel, "Allowed relative min-EE shortfall");

  std::string dataset;
  double reference = 0.0;
  auto* fit = app.add_subcommand("fit", "Fit a log-distance path-loss model to a measured-channel file");
  fit->add_option("dataset", dataset, "Dataset file (binary container or m,k,i,re,im CSV)")->required();
  fit->add_option("--reference-distance", reference, "Reference distance in m (default: minimum link distance)");

  CommonFlags synth_flags;
  std::string synth_out;
  int frequencies = 1;
  bool no_fading = false;
  bool as_csv = false;
  auto* synth = app.add_subcommand("synth", "Write a synthetic measured-channel file from the configured scenario");
  add_common(synth, synth_flags);
  synth->add_option("--out", synth_out, "Output file")->required();
  synth->add_option("--frequencies", frequencies, "Frequency indices per link")->check(CLI::PositiveNumber);
  synth->add_flag("--no-fading", no_fading, "Coefficients equal sqrt(beta)");
  synth->add_flag("--csv", as_csv, "Write the CSV variant instead of the binary container");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (*run) {
      const CliConfig cfg = resolve(run_flags);
      const RunOutputs outputs = cmd_run(cfg, out_dir, workers);
      for (const auto& f : outputs.files) std::cout << (std::filesystem::path(out_dir) / f).string() << '\n';
      for (const auto& e : outputs.summary.errors)
        std::cerr << "drop " << e.drop_id << " failed: " << e.message << '\n';
      return kOk;
    }
    if (*oracle) {
      const CliConfig cfg = resolve(oracle_flags);
      const OracleReport report = cmd_oracle(cfg, instances, grid, tol);
      print_oracle_report(std::cout, report);
      return report.all_pass() ? kOk : kOracleMismatch;
    }
    if (*fit) {
      const PathLossFit result = cmd_fit(dataset, reference);
      const nlohmann::ordered_json j = {{"intercept_db", result.model.intercept},
                                        {"slope_db_per_decade", result.model.slope},
                                        {"reference_distance_m", result.model.reference_distance},
                                        {"shadow_sigma_db", result.model.shadow_sigma},
                                        {"links", result.links}};
      std::cout << j.dump(2) << '\n';
      return kOk;
    }
    if (*synth) {
      const CliConfig cfg = resolve(synth_flags);
      const MeasuredDataset ds = cmd_synth(cfg, frequencies, !no_fading);
      if (as_csv)
        save_measured_csv(ds, synth_out);
      else
        save_measured(ds, synth_out);
      return kOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const TooManyUEs& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kUsageError;
}

}  // namespace cfmimo::cli
