// SPDX-License-Identifier: Apache-2.0
// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "cfmimo/cli.hpp"
#include "cfmimo/combining.hpp"
#include "cfmimo/config.hpp"
#include "cfmimo/estimation.hpp"
#include "cfmimo/harness.hpp"
#include "cfmimo/metrics.hpp"
#include "cfmimo/tpc.hpp"

using namespace cfmimo;
namespace fs = std::filesystem;

namespace {

// Tolerances and sizes.
constexpr double kNoisePower = 4.013e-13;
constexpr double kRhoExpected = 4.98e11;
constexpr double kRadioRel = 1e-3;

constexpr int kOracleInstances = 20;
constexpr int kOracleGrid = 201;
constexpr double kOracleSeAbs = 1e-2;
constexpr double kOracleEeRel = 1e-2;
constexpr double kLowTargetSe = 1.0;
constexpr double kOracleSeSeconds = 60.0;
constexpr double kOracleEeSeconds = 120.0;

constexpr int kDominanceRealizations = 1000;
constexpr double kDominanceTol = 1e-9;

constexpr double kHighTargetSe = 20.0;
constexpr double kOverlapRel = 0.05;
constexpr double kCampaignSeconds = 600.0;

constexpr int kEstimationDraws = 100000;
constexpr double kEstimationRel = 0.02;

constexpr int kDeterminismWorkers = 8;

constexpr double kFitDecimals = 5e-4;
constexpr double kFitSigma = 9.0;
constexpr double kFitSigmaRel = 0.05;

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Runs `body`, turning an escaped exception into a FAIL line.
void criterion(int id, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, false, std::string("threw: ") + e.what());
  }
}

CampaignSpec desk() { return default_config(Profile::Desk).campaign; }

CampaignSpec oracle_spec() {
  CampaignSpec spec = desk();
  spec.L = 8;
  spec.N = 1;
  spec.K = 2;
  spec.csi = CsiMode::Perfect;
  spec.combiners = {CombinerKind::MR};
  return spec;
}

const GroupSummary& group(const CampaignResult& r, const std::string& algorithm) {
  return r.summary.groups.at(algorithm).at("MMSE");
}

double percentile_of(std::vector<double> values, double p) {
  return percentile(cdf(values), p);
}

void radio_constants() {
  const SystemConfig cfg;
  const double noise = noise_power(cfg);
  const double rho = transmit_snr(cfg);
  const double e_noise = std::abs(noise / kNoisePower - 1.0);
  const double e_rho = std::abs(rho / kRhoExpected - 1.0);
  report(1, e_noise <= kRadioRel && e_rho <= kRadioRel,
         fmt("noise %.5e W (rel err %.2e), rho %.5e (rel err %.2e), limit %.0e", noise, e_noise, rho, e_rho,
             kRadioRel));
}

void oracle_max_min_se() {
  const auto start = std::chrono::steady_clock::now();
  const CampaignSpec spec = oracle_spec();
  const double rho = transmit_snr(spec.system);
  double worst = -std::numeric_limits<double>::infinity();
  int missed = 0;
  for (int i = 0; i < kOracleInstances; ++i) {
    const auto real = generate_drop(spec, i).front();
    const TpcResult r = max_min_se(real.H_hat, real.err_var, rho, CombinerKind::MR, spec.system, spec.tpc);
    const OracleResult grid = brute_force_oracle(real.H_hat, real.err_var, rho, CombinerKind::MR,
                                                 OracleObjective::MinSe, 0.0, kOracleGrid, spec.system);
    const double gap = grid.objective - r.diagnostics.min_se;
    worst = std::max(worst, gap);
    if (r.status != TpcStatus::Optimal || gap > kOracleSeAbs) ++missed;
  }
  const double secs = seconds_since(start);
  report(2, missed == 0 && secs < kOracleSeSeconds,
         fmt("%d/%d instances within %.0e bits/s/Hz of the %d-point grid, worst shortfall %.3e, %.1f s",
             kOracleInstances - missed, kOracleInstances, kOracleSeAbs, kOracleGrid, worst, secs));
}

void oracle_max_min_ee() {
  const auto start = std::chrono::steady_clock::now();
  CampaignSpec spec = oracle_spec();
  spec.tpc.target_se = kLowTargetSe;
  const double rho = transmit_snr(spec.system);
  double worst = -std::numeric_limits<double>::infinity();
  int missed = 0, compared = 0;
  for (int i = 0; i < kOracleInstances; ++i) {
    const auto real = generate_drop(spec, i).front();
    const TpcResult r = max_min_ee(real.H_hat, real.err_var, rho, CombinerKind::MR, spec.system, spec.tpc);
    const OracleResult grid = brute_force_oracle(real.H_hat, real.err_var, rho, CombinerKind::MR,
                                                 OracleObjective::MinEe, kLowTargetSe, kOracleGrid, spec.system);
    if (!grid.feasible) {
      // Nothing on the grid meets the floor; the solver must still honor it.
      if (r.status == TpcStatus::Optimal && r.diagnostics.min_se < kLowTargetSe - 1e-6) ++missed;
      continue;
    }
    ++compared;
    const double gap = r.status == TpcStatus::Optimal ? (grid.objective - r.diagnostics.min_ee) / grid.objective : 1.0;
    worst = std::max(worst, gap);
    if (gap > kOracleEeRel) ++missed;
  }
  const double secs = seconds_since(start);
  report(3, missed == 0 && secs < kOracleEeSeconds,
         fmt("%d/%d instances within %.0f%% of the %d-point grid (%d grid-feasible), worst relative shortfall "
             "%.3e, %.1f s",
             kOracleInstances - missed, kOracleInstances, 100 * kOracleEeRel, kOracleGrid, compared, worst, secs));
}

void combiner_dominance() {
  CampaignSpec spec = desk();
  spec.L = 32;
  spec.N = 1;
  spec.K = 8;
  spec.csi = CsiMode::Estimated;
  const double rho = transmit_snr(spec.system);
  const VectorXd q = VectorXd::Ones(spec.K);
  long long checked = 0, violations = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kDominanceRealizations; ++i) {
    const auto real = generate_drop(spec, i).front();
    const auto mr = sinr_and_se(mr_weights(real.H_hat).W, real.H_hat, real.err_var, q, rho);
    const auto mmse = sinr_and_se(mmse_weights(real.H_hat, real.err_var, q, rho).W, real.H_hat, real.err_var, q, rho);
    for (int k = 0; k < spec.K; ++k) {
      ++checked;
      const double ratio = mmse.sinr(k) / mr.sinr(k);
      worst = std::min(worst, ratio);
      if (mmse.sinr(k) < mr.sinr(k) * (1 - kDominanceTol)) ++violations;
    }
  }
  report(4, violations == 0,
         fmt("MMSE >= MR SINR for %lld/%lld UE realizations, smallest MMSE/MR ratio %.6f", checked - violations,
             checked, worst));
}

void trade_off_ordering() {
  const auto start = std::chrono::steady_clock::now();
  CampaignSpec spec = desk();
  spec.algorithms = {{TpcAlgorithm::MaxPower, std::nullopt, ""},
                     {TpcAlgorithm::MaxMinSe, std::nullopt, ""},
                     {TpcAlgorithm::MaxMinEe, kLowTargetSe, ""},
                     {TpcAlgorithm::MaxMinEe, kHighTargetSe, "max_min_ee_20"}};
  const CampaignResult r = run_campaign(spec, 1);
  const double secs = seconds_since(start);
  const GroupSummary& mp = group(r, "max_power");
  const GroupSummary& se = group(r, "max_min_se");
  const GroupSummary& ee = group(r, "max_min_ee");

  const bool se_order = mp.median_se >= se.median_se && se.median_se >= ee.median_se;
  const bool ee_order = ee.median_min_ee > se.median_min_ee && se.median_min_ee > mp.median_min_ee;

  std::vector<double> high;
  for (const auto& row : r.rows)
    if (row.algorithm == "max_min_ee_20" && row.status == TpcStatus::Optimal) high.push_back(row.se);
  bool overlap = true;
  std::string overlap_text = "max_min_ee(20) infeasible in every drop, overlap check vacuous";
  if (!high.empty()) {
    const double median_high = percentile_of(high, 50.0);
    const double rel = std::abs(median_high / mp.median_se - 1.0);
    overlap = rel <= kOverlapRel;
    overlap_text = fmt("max_min_ee(20) median SE %.3f vs max_power %.3f (rel %.3f) over %zu feasible UEs", median_high,
                       mp.median_se, rel, high.size());
  }
  report(5, se_order && ee_order && overlap && r.summary.errors.empty() && secs < kCampaignSeconds,
         fmt("median SE %.3f >= %.3f >= %.3f; median min-EE %.4g < %.4g < %.4g; ", mp.median_se, se.median_se,
             ee.median_se, mp.median_min_ee, se.median_min_ee, ee.median_min_ee) +
             overlap_text + fmt("; %.1f s", secs));
}

void m_scaling() {
  const auto start = std::chrono::steady_clock::now();
  auto run = [](int L) {
    CampaignSpec spec = desk();
    spec.L = L;
    spec.K = 16;
    spec.drops = 100;
    spec.algorithms = {{TpcAlgorithm::MaxPower, std::nullopt, ""}};
    return group(run_campaign(spec, 1), "max_power");
  };
  const GroupSummary small = run(64), large = run(128);
  const double secs = seconds_since(start);
  report(6, large.median_se > small.median_se && large.median_ee > small.median_ee && secs < kCampaignSeconds,
         fmt("median SE %.3f -> %.3f, median EE %.4g -> %.4g from M=64 to M=128, %.1f s", small.median_se,
             large.median_se, small.median_ee, large.median_ee, secs));
}

void k_scaling() {
  std::vector<double> medians;
  for (int K : {4, 8, 16}) {
    CampaignSpec spec = desk();
    spec.K = K;
    spec.drops = 100;
    spec.algorithms = {{TpcAlgorithm::MaxPower, std::nullopt, ""}};
    medians.push_back(group(run_campaign(spec, 1), "max_power").median_se);
  }
  report(7, medians[0] >= medians[1] && medians[1] >= medians[2],
         fmt("median SE per UE %.3f, %.3f, %.3f for K = 4, 8, 16", medians[0], medians[1], medians[2]));
}

void distribution_benefit() {
  auto p20 = [](int L, int N) {
    CampaignSpec spec = desk();
    spec.L = L;
    spec.N = N;
    spec.algorithms = {{TpcAlgorithm::MaxPower, std::nullopt, ""}};
    std::vector<double> se;
    for (const auto& row : run_campaign(spec, 1).rows) se.push_back(row.se);
    return percentile_of(se, 20.0);
  };
  const double distributed = p20(64, 1), colocated = p20(1, 64);
  report(8, distributed >= colocated,
         fmt("20th-percentile SE %.3f (L=64) vs %.3f (L=1)", distributed, colocated));
}

void estimation_statistics() {
  struct Point {
    double snr;
    double beta;
  };
  const Point points[] = {{100.0, 0.01}, {10.0, 0.5}, {1e4, 2e-3}};
  bool pass = std::abs(estimate_variance(100.0, 0.01) - 0.005) <= 1e-15;
  std::string detail = fmt("gamma(100, 0.01) = %.6g", estimate_variance(100.0, 0.01));
  Rng rng(mix_seed(9, 0));
  for (const auto& p : points) {
    const auto pilots = make_pilots<double>(1, 1);
    const MatrixXd beta = MatrixXd::Constant(kEstimationDraws, 1, p.beta);
    const CMatrixXd H = realize<double>(beta, draw_small_scale<double>(kEstimationDraws, 1, rng));
    const auto est = mmse_estimate<double>(simulate_pilot_rx<double>(H, pilots, p.snr, rng), beta, pilots, p.snr);
    const double gamma = estimate_variance(p.snr, p.beta);
    const double var = est.H_hat.cwiseAbs2().mean();
    const double rel = std::abs(var / gamma - 1.0);
    const double err_dev = (est.err_var.array() - (p.beta - gamma)).abs().maxCoeff();
    pass = pass && rel <= kEstimationRel && err_dev <= 4 * std::numeric_limits<double>::epsilon() * p.beta;
    detail += fmt("; (%.0f, %.3g): var/gamma - 1 = %+.4f, |err - (beta - gamma)| = %.1e", p.snr, p.beta,
                  var / gamma - 1.0, err_dev);
  }
  report(9, pass, detail);
}

void infeasibility_handling() {
  // Deep shadow: a 1e-9 amplitude link cannot carry 20 bits/s/Hz.
  CMatrixXd H = CMatrixXd::Zero(4, 2);
  H(0, 0) = 1e-9;
  H(1, 1) = 2e-9;
  TpcOptions opts;
  opts.target_se = kHighTargetSe;
  const SystemConfig cfg;
  const TpcResult direct = max_min_ee(H, MatrixXd::Zero(4, 2), transmit_snr(cfg), CombinerKind::MMSE, cfg, opts);

  CampaignSpec spec = desk();
  spec.L = 16;
  spec.K = 4;
  spec.drops = 6;
  spec.indoor_fraction = 1.0;
  spec.indoor_penalty_db = 60.0;
  spec.algorithms = {{TpcAlgorithm::MaxPower, std::nullopt, ""},
                     {TpcAlgorithm::MaxMinEe, kHighTargetSe, "max_min_ee_20"}};
  const CampaignResult r = run_campaign(spec, 1);
  const double fraction = group(r, "max_min_ee_20").infeasible_fraction;
  const bool complete = r.rows.size() == static_cast<std::size_t>(spec.drops * 2 * spec.K) && r.summary.errors.empty();
  report(10, direct.status == TpcStatus::Infeasible && complete && fraction > 0.0,
         fmt("direct status %s; campaign kept %zu rows, %zu drop errors, infeasible_fraction %.3f",
             to_string(direct.status).c_str(), r.rows.size(), r.summary.errors.size(), fraction));
}

void determinism() {
  const CampaignSpec spec = desk();
  auto csv = [&](int workers) {
    std::ostringstream out;
    write_results_csv(out, run_campaign(spec, workers).rows);
    return out.str();
  };
  const std::string one = csv(1), many = csv(kDeterminismWorkers);
  report(11, one == many && !one.empty(),
         fmt("results.csv %zu bytes at 1 worker, %zu bytes at %d workers, %s", one.size(), many.size(),
             kDeterminismWorkers, one == many ? "identical" : "different"));
}

void channel_model_recovery() {
  const fs::path dir = fs::temp_directory_path() / "cfmimo_acceptance_fit";
  fs::create_directories(dir);
  auto fit_for = [&](double sigma, const std::string& name) {
    CliConfig cfg = default_config(Profile::Desk);
    CampaignSpec& c = cfg.campaign;
    c.L = 100;
    c.K = 100;
    c.area.width = 1000.0;
    c.area.depth = 1000.0;
    c.area.ap_heights = {45.0};
    c.path_loss = PathLossModel::adjusted();
    c.path_loss.shadow_sigma = sigma;
    save_measured(cli::cmd_synth(cfg, 1, false), dir / name);
    return cli::cmd_fit(dir / name, PathLossModel::adjusted().reference_distance);
  };
  const PathLossFit clean = fit_for(0.0, "noiseless.cfmd");
  const PathLossFit noisy = fit_for(kFitSigma, "shadowed.cfmd");
  fs::remove_all(dir);
  const PathLossModel truth = PathLossModel::adjusted();
  const double d_int = std::abs(clean.model.intercept - truth.intercept);
  const double d_slope = std::abs(clean.model.slope - truth.slope);
  const double sigma_rel = std::abs(noisy.model.shadow_sigma / kFitSigma - 1.0);
  report(12, d_int < kFitDecimals && d_slope < kFitDecimals && sigma_rel <= kFitSigmaRel && noisy.links >= 10000,
         fmt("noiseless intercept %.4f, slope %.4f; shadowed sigma %.3f dB (rel %.3f) over %zu links",
             clean.model.intercept, clean.model.slope, noisy.model.shadow_sigma, sigma_rel, noisy.links));
}

}  // namespace

int main() {
  criterion(1, radio_constants);
  criterion(2, oracle_max_min_se);
  criterion(3, oracle_max_min_ee);
  criterion(4, combiner_dominance);
  criterion(5, trade_off_ordering);
  criterion(6, m_scaling);
  criterion(7, k_scaling);
  criterion(8, distribution_benefit);
  criterion(9, estimation_statistics);
  criterion(10, infeasibility_handling);
  criterion(11, determinism);
  criterion(12, channel_model_recovery);
  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
