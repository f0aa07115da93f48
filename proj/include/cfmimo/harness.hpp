// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfmimo/channel.hpp"
#include "cfmimo/metrics.hpp"
#include "cfmimo/scenario.hpp"
#include "cfmimo/tpc.hpp"

namespace cfmimo {

enum class ChannelSource { Synthetic, Measured };
enum class CsiMode { Estimated, Perfect };

std::string to_string(ChannelSource source);
std::string to_string(CsiMode mode);
ChannelSource channel_source_from_string(const std::string& name);
CsiMode csi_mode_from_string(const std::string& name);

struct AlgorithmSpec {
  TpcAlgorithm algorithm = TpcAlgorithm::MaxPower;
  /// Overrides TpcOptions::target_se for this entry (max-min EE only).
  std::optional<double> target_se;
  /// Name used in result rows and file names; defaults to the algorithm name.
  std::string label;

  std::string display_name() const { return label.empty() ? to_string(algorithm) : label; }
};

struct CampaignSpec {
  AreaSpec area;
  int L = 64;
  int N = 1;
  int K = 8;
  ApPlacement ap_placement = ApPlacement::Random;
  UePlacement ue_placement = UePlacement::Spread;
  double cluster_radius = kDefaultClusterRadius;
  double indoor_fraction = 0.0;
  double min_antenna_spacing = kDefaultAntennaSpacing;

  ChannelSource source = ChannelSource::Synthetic;
  PathLossModel path_loss = PathLossModel::adjusted();
  double indoor_penalty_db = kDefaultIndoorPenaltyDb;
  std::string measured_path;
  CsiMode csi = CsiMode::Estimated;

  std::vector<CombinerKind> combiners{CombinerKind::MMSE};
  std::vector<AlgorithmSpec> algorithms{{TpcAlgorithm::MaxPower, std::nullopt, ""},
                                        {TpcAlgorithm::MaxMinSe, std::nullopt, ""},
                                        {TpcAlgorithm::MaxMinEe, std::nullopt, ""}};
  int drops = 200;
  int realizations_per_drop = 1;
  std::uint64_t base_seed = 1;

  SystemConfig system;
  TpcOptions tpc;

  int M() const { return L * N; }
  void validate() const;
};

struct ResultRow {
  int drop_id = 0;
  int realization_id = 0;
  std::string algorithm;
  CombinerKind combiner = CombinerKind::MMSE;
  int ue_id = 0;
  double se = 0.0;
  double ee = 0.0;
  double sinr = 0.0;
  double q = 0.0;
  TpcStatus status = TpcStatus::Optimal;
};

struct CdfPoint {
  double value = 0.0;
  double fraction = 0.0;
};

/// Empirical CDF with the midpoint convention F_i = (i - 1/2) / n.
std::vector<CdfPoint> cdf(std::span<const double> values);
/// Linear interpolation between order statistics at rank p/100 (n - 1); p in [0, 100].
double percentile(const std::vector<CdfPoint>& distribution, double p);

struct GroupSummary {
  double median_se = 0.0;
  /// Value exceeded with 95% probability (5th percentile).
  double p95_se = 0.0;
  double median_ee = 0.0;
  double p95_ee = 0.0;
  double infeasible_fraction = 0.0;
  /// Medians over solves of the per-solve worst UE.
  double median_min_se = 0.0;
  double median_min_ee = 0.0;
  std::size_t solves = 0;
  std::size_t infeasible = 0;
};

struct DropError {
  int drop_id = 0;
  std::string message;
};

struct CampaignSummary {
  /// algorithm label -> combiner name -> summary
  std::map<std::string, std::map<std::string, GroupSummary>> groups;
  std::vector<DropError> errors;
};

struct CampaignResult {
  std::vector<ResultRow> rows;
  CampaignSummary summary;
};

/// Channel state of one realization, shared by every (algorithm, combiner) pair.
struct DropRealization {
  MatrixXd beta;
  CMatrixXd H;
  CMatrixXd H_hat;
  MatrixXd err_var;
};

std::uint64_t drop_seed(std::uint64_t base_seed, int drop_id);
std::uint64_t realization_seed(std::uint64_t base_seed, int drop_id, int realization_id);

/// Channel realizations of one drop. `dataset` is required for measured sources.
std::vector<DropRealization> generate_drop(const CampaignSpec& spec, int drop_id,
                                           const MeasuredDataset* dataset = nullptr);

std::vector<ResultRow> run_drop(const CampaignSpec& spec, int drop_id, const MeasuredDataset* dataset = nullptr);

/// Runs every drop, on `workers` threads; output order is canonical (drop, realization).
CampaignResult run_campaign(const CampaignSpec& spec, int workers = 1);

CampaignSummary summarize(const CampaignSpec& spec, const std::vector<ResultRow>& rows);

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);
void write_cdf_csv(std::ostream& out, const std::vector<CdfPoint>& distribution);
nlohmann::ordered_json summary_to_json(const CampaignSummary& summary);

/// Shortest round-trip decimal form, independent of locale.
std::string format_double(double value);

}  // namespace cfmimo
