// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <numeric>
#include <ostream>
#include <thread>

#include "cfmimo/estimation.hpp"

namespace cfmimo {

std::string to_string(ChannelSource source) { return source == ChannelSource::Measured ? "measured" : "synthetic"; }
std::string to_string(CsiMode mode) { return mode == CsiMode::Perfect ? "perfect" : "estimated"; }

ChannelSource channel_source_from_string(const std::string& name) {
  if (name == "synthetic") return ChannelSource::Synthetic;
  if (name == "measured") return ChannelSource::Measured;
  throw std::invalid_argument("unknown channel source '" + name + "' (expected synthetic|measured)");
}

CsiMode csi_mode_from_string(const std::string& name) {
  if (name == "estimated") return CsiMode::Estimated;
  if (name == "perfect") return CsiMode::Perfect;
  throw std::invalid_argument("unknown CSI mode '" + name + "' (expected estimated|perfect)");
}

void CampaignSpec::validate() const {
  area.validate();
  if (L < 1 || N < 1 || K < 1) throw std::invalid_argument("L, N and K must be positive");
  if (drops < 1) throw std::invalid_argument("drops must be positive");
  if (realizations_per_drop < 1) throw std::invalid_argument("realizations_per_drop must be positive");
  if (!(indoor_fraction >= 0.0 && indoor_fraction <= 1.0)) throw std::invalid_argument("indoor_fraction must lie in [0, 1]");
  if (!(cluster_radius > 0.0)) throw std::invalid_argument("cluster_radius must be positive");
  if (N > 1 && !(min_antenna_spacing > 0.0)) throw std::invalid_argument("min_antenna_spacing must be positive");
  if (!(indoor_penalty_db >= 0.0)) throw std::invalid_argument("indoor_penalty_db must be >= 0");
  if (combiners.empty()) throw std::invalid_argument("at least one combiner is required");
  if (algorithms.empty()) throw std::invalid_argument("at least one algorithm is required");
  if (source == ChannelSource::Measured && measured_path.empty())
    throw std::invalid_argument("measured channel source needs a dataset path");
  std::vector<std::string> labels;
  for (const auto& a : algorithms) {
    if (a.target_se && !(*a.target_se >= 0.0)) throw std::invalid_argument("algorithm target_se must be >= 0");
    labels.push_back(a.display_name());
  }
  std::sort(labels.begin(), labels.end());
  if (std::adjacent_find(labels.begin(), labels.end()) != labels.end())
    throw std::invalid_argument("algorithm labels must be unique");
  path_loss.validate();
  system.validate();
  tpc.validate();
  if (system.tau_p && *system.tau_p < K) throw TauTooSmall("tau_p must be >= K for orthogonal pilots");
}

std::uint64_t drop_seed(std::uint64_t base_seed, int drop_id) {
  return mix_seed(base_seed, static_cast<std::uint64_t>(drop_id));
}

std::uint64_t realization_seed(std::uint64_t base_seed, int drop_id, int realization_id) {
  return mix_seed(drop_seed(base_seed, drop_id), static_cast<std::uint64_t>(realization_id));
}

namespace {

std::vector<int> sample_without_replacement(int population, int count, Rng& rng) {
  if (count > population)
    throw std::invalid_argument("cannot select " + std::to_string(count) + " of " + std::to_string(population) +
                                " dataset locations");
  std::vector<int> all(population);
  std::iota(all.begin(), all.end(), 0);
  // Partial Fisher-Yates with an explicit draw so the sequence does not depend on std::shuffle.
  for (int j = 0; j < count; ++j) {
    std::uniform_int_distribution<int> pick(j, population - 1);
    std::swap(all[j], all[pick(rng)]);
  }
  all.resize(count);
  return all;
}

void estimate_into(const CampaignSpec& spec, DropRealization& real, Rng& rng) {
  if (spec.csi == CsiMode::Perfect) {
    auto est = perfect_csi<double>(real.H);
    real.H_hat = std::move(est.H_hat);
    real.err_var = std::move(est.err_var);
    return;
  }
  const auto pilots = make_pilots<double>(spec.K, pilot_length(spec.system, spec.K));
  const double rho_p = pilot_snr(spec.system);
  const CMatrixXd Y = simulate_pilot_rx<double>(real.H, pilots, rho_p, rng);
  auto est = mmse_estimate<double>(Y, real.beta, pilots, rho_p);
  real.H_hat = std::move(est.H_hat);
  real.err_var = std::move(est.err_var);
}

}  // namespace

std::vector<DropRealization> generate_drop(const CampaignSpec& spec, int drop_id, const MeasuredDataset* dataset) {
  Rng rng(drop_seed(spec.base_seed, drop_id));
  std::vector<DropRealization> out;
  out.reserve(spec.realizations_per_drop);

  if (spec.source == ChannelSource::Synthetic) {
    Topology topo = place_aps(spec.area, spec.L, spec.N, spec.ap_placement, spec.min_antenna_spacing, rng);
    topo.ues = place_ues(spec.area, spec.K, spec.ue_placement, spec.cluster_radius, spec.indoor_fraction, rng);
    const MatrixXd beta = draw_large_scale(topo, spec.path_loss, rng, spec.indoor_penalty_db);
    for (int r = 0; r < spec.realizations_per_drop; ++r) {
      Rng rr(realization_seed(spec.base_seed, drop_id, r));
      DropRealization real;
      real.beta = beta;
      real.H = realize<double>(beta, draw_small_scale<double>(spec.M(), spec.K, rr));
      estimate_into(spec, real, rr);
      out.push_back(std::move(real));
    }
    return out;
  }

  if (dataset == nullptr) throw std::invalid_argument("measured channel source needs a loaded dataset");
  const auto ap_rows = sample_without_replacement(dataset->num_ap_locations, spec.M(), rng);
  const auto ue_cols = sample_without_replacement(dataset->num_ue_locations, spec.K, rng);
  const auto freqs = sample_without_replacement(dataset->num_frequencies, spec.realizations_per_drop, rng);
  const MatrixXd beta = beta_from_measured(*dataset, ap_rows, ue_cols);
  for (int r = 0; r < spec.realizations_per_drop; ++r) {
    Rng rr(realization_seed(spec.base_seed, drop_id, r));
    DropRealization real;
    real.beta = beta;
    real.H = dataset->realization(freqs[r], ap_rows, ue_cols);
    estimate_into(spec, real, rr);
    out.push_back(std::move(real));
  }
  return out;
}

std::vector<ResultRow> run_drop(const CampaignSpec& spec, int drop_id, const MeasuredDataset* dataset) {
  const auto realizations = generate_drop(spec, drop_id, dataset);
  const double rho = transmit_snr(spec.system);
  std::vector<ResultRow> rows;
  rows.reserve(realizations.size() * spec.algorithms.size() * spec.combiners.size() * spec.K);
  for (std::size_t r = 0; r < realizations.size(); ++r) {
    const auto& real = realizations[r];
    for (const auto& alg : spec.algorithms) {
      TpcOptions opts = spec.tpc;
      if (alg.target_se) opts.target_se = *alg.target_se;
      for (const auto kind : spec.combiners) {
        const TpcResult res = run_tpc(alg.algorithm, real.H_hat, real.err_var, rho, kind, spec.system, opts);
        for (int k = 0; k < spec.K; ++k) {
          ResultRow row;
          row.drop_id = drop_id;
          row.realization_id = static_cast<int>(r);
          row.algorithm = alg.display_name();
          row.combiner = kind;
          row.ue_id = k;
          row.se = res.metrics.se(k);
          row.ee = res.metrics.ee(k);
          row.sinr = res.metrics.sinr(k);
          row.q = res.q(k);
          row.status = res.status;
          rows.push_back(std::move(row));
        }
      }
    }
  }
  return rows;
}

std::vector<CdfPoint> cdf(std::span<const double> values) {
  if (values.empty()) throw EmptyInput("cdf of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  std::vector<CdfPoint> out(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) out[i] = {sorted[i], (static_cast<double>(i) + 0.5) / n};
  return out;
}

double percentile(const std::vector<CdfPoint>& distribution, double p) {
  if (distribution.empty()) throw EmptyInput("percentile of an empty distribution");
  if (!(p >= 0.0 && p <= 100.0)) throw std::invalid_argument("percentile must lie in [0, 100]");
  const double rank = p / 100.0 * static_cast<double>(distribution.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, distribution.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return distribution[lo].value + frac * (distribution[hi].value - distribution[lo].value);
}

CampaignSummary summarize(const CampaignSpec& spec, const std::vector<ResultRow>& rows) {
  CampaignSummary summary;
  for (const auto& alg : spec.algorithms) {
    for (const auto kind : spec.combiners) {
      std::vector<double> se, ee, min_se, min_ee;
      GroupSummary g;
      const std::string name = alg.display_name();
      for (std::size_t j = 0; j < rows.size();) {
        const auto& head = rows[j];
        std::size_t end = j;
        while (end < rows.size() && rows[end].drop_id == head.drop_id &&
               rows[end].realization_id == head.realization_id && rows[end].algorithm == head.algorithm &&
               rows[end].combiner == head.combiner)
          ++end;
        if (head.algorithm == name && head.combiner == kind) {
          double lo_se = head.se, lo_ee = head.ee;
          for (std::size_t i = j; i < end; ++i) {
            se.push_back(rows[i].se);
            ee.push_back(rows[i].ee);
            lo_se = std::min(lo_se, rows[i].se);
            lo_ee = std::min(lo_ee, rows[i].ee);
          }
          min_se.push_back(lo_se);
          min_ee.push_back(lo_ee);
          ++g.solves;
          if (head.status == TpcStatus::Infeasible) ++g.infeasible;
        }
        j = end;
      }
      if (g.solves > 0) {
        const auto se_cdf = cdf(se);
        const auto ee_cdf = cdf(ee);
        g.median_se = percentile(se_cdf, 50.0);
        g.p95_se = percentile(se_cdf, 5.0);
        g.median_ee = percentile(ee_cdf, 50.0);
        g.p95_ee = percentile(ee_cdf, 5.0);
        g.median_min_se = percentile(cdf(min_se), 50.0);
        g.median_min_ee = percentile(cdf(min_ee), 50.0);
        g.infeasible_fraction = static_cast<double>(g.infeasible) / static_cast<double>(g.solves);
      }
      summary.groups[name][to_string(kind)] = g;
    }
  }
  return summary;
}

CampaignResult run_campaign(const CampaignSpec& spec, int workers) {
  spec.validate();
  std::unique_ptr<MeasuredDataset> dataset;
  if (spec.source == ChannelSource::Measured)
    dataset = std::make_unique<MeasuredDataset>(load_measured(spec.measured_path));

  std::vector<std::vector<ResultRow>> per_drop(spec.drops);
  std::vector<std::optional<std::string>> failures(spec.drops);
  std::atomic<int> next{0};
  auto work = [&] {
    for (int d = next++; d < spec.drops; d = next++) {
      try {
        per_drop[d] = run_drop(spec, d, dataset.get());
      } catch (const std::exception& e) {
        failures[d] = e.what();
      }
    }
  };
  const int threads = std::clamp(workers, 1, spec.drops);
  if (threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
  }

  CampaignResult result;
  for (int d = 0; d < spec.drops; ++d)
    result.rows.insert(result.rows.end(), std::make_move_iterator(per_drop[d].begin()),
                       std::make_move_iterator(per_drop[d].end()));
  result.summary = summarize(spec, result.rows);
  for (int d = 0; d < spec.drops; ++d)
    if (failures[d]) result.summary.errors.push_back({d, *failures[d]});
  return result;
}

std::string format_double(double value) {
  if (value == 0.0) return "0";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return {buf, ptr};
}

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "drop_id,realization_id,algorithm,combiner,ue_id,se,ee,sinr,q,status\n";
  for (const auto& r : rows)
    out << r.drop_id << ',' << r.realization_id << ',' << r.algorithm << ',' << to_string(r.combiner) << ','
        << r.ue_id << ',' << format_double(r.se) << ',' << format_double(r.ee) << ',' << format_double(r.sinr) << ','
        << format_double(r.q) << ',' << to_string(r.status) << '\n';
}

void write_cdf_csv(std::ostream& out, const std::vector<CdfPoint>& distribution) {
  for (const auto& p : distribution) out << format_double(p.value) << ' ' << format_double(p.fraction) << '\n';
}

nlohmann::ordered_json summary_to_json(const CampaignSummary& summary) {
  nlohmann::ordered_json root = nlohmann::ordered_json::object();
  for (const auto& [alg, by_combiner] : summary.groups) {
    for (const auto& [comb, g] : by_combiner) {
      root[alg][comb] = {{"median_se", g.median_se},
                         {"p95_se", g.p95_se},
                         {"median_ee", g.median_ee},
                         {"p95_ee", g.p95_ee},
                         {"infeasible_fraction", g.infeasible_fraction},
                         {"median_min_se", g.median_min_se},
                         {"median_min_ee", g.median_min_ee},
                         {"solves", g.solves}};
    }
  }
  if (!summary.errors.empty()) {
    auto& errs = root["errors"] = nlohmann::ordered_json::array();
    for (const auto& e : summary.errors) errs.push_back({{"drop_id", e.drop_id}, {"message", e.message}});
  }
  return root;
}

}  // namespace cfmimo
