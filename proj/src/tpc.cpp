// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/tpc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "cfmimo/combining.hpp"

namespace cfmimo {

namespace {

constexpr int kSettleInterval = 8;
constexpr int kMaxBracketDoublings = 200;

int rounds_for(CombinerKind kind, const TpcOptions& opts) {
  return kind == CombinerKind::MR ? 1 : std::max(1, opts.alternations);
}

double sup_distance(const VectorXd& a, const VectorXd& b) {
  return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

// Fixed-point map of the capped power update for one SINR target.
class PowerUpdate {
 public:
  PowerUpdate(const LinkGains<double>& g, double rho, double t, double cap)
      : coupling_(rho * (g.cross + g.error)),
        noise_(g.noise),
        scale_((t / (rho * g.signal.array())).matrix()),
        cap_(cap) {}

  VectorXd demand(const VectorXd& q) const { return scale_.cwiseProduct(coupling_ * q + noise_); }
  VectorXd apply(const VectorXd& q) const { return demand(q).cwiseMin(cap_); }

  // Limit of the uncapped iteration, x = A x + b. A nonnegative solution exists iff the
  // spectral radius of A is below one; the capped limit equals it when x <= cap.
  std::optional<VectorXd> uncapped_limit() const {
    const auto K = noise_.size();
    const MatrixXd A = MatrixXd::Identity(K, K) - scale_.asDiagonal() * coupling_;
    const VectorXd x = A.partialPivLu().solve(scale_.cwiseProduct(noise_));
    if (!x.allFinite() || (x.array() < 0.0).any()) return std::nullopt;
    return x;
  }

  // Solves for the limit assuming the UEs currently at the cap stay there.
  std::optional<VectorXd> settle(const VectorXd& q, double tol) const {
    const auto K = q.size();
    std::vector<Eigen::Index> free;
    for (Eigen::Index k = 0; k < K; ++k)
      if (q(k) < cap_) free.push_back(k);
    VectorXd candidate = VectorXd::Constant(K, cap_);
    if (!free.empty()) {
      const auto F = static_cast<Eigen::Index>(free.size());
      MatrixXd A = MatrixXd::Identity(F, F);
      VectorXd b(F);
      for (Eigen::Index r = 0; r < F; ++r) {
        const Eigen::Index k = free[r];
        double rhs = noise_(k);
        for (Eigen::Index j = 0; j < K; ++j)
          if (q(j) >= cap_) rhs += coupling_(k, j) * cap_;
        b(r) = scale_(k) * rhs;
        for (Eigen::Index c = 0; c < F; ++c) A(r, c) -= scale_(k) * coupling_(k, free[c]);
      }
      const VectorXd x = A.partialPivLu().solve(b);
      if (!x.allFinite()) return std::nullopt;
      for (Eigen::Index r = 0; r < F; ++r) {
        // The limit dominates every iterate.
        if (x(r) < q(free[r]) - 1e-12 || x(r) > cap_) return std::nullopt;
        candidate(free[r]) = x(r);
      }
    }
    if (sup_distance(apply(candidate), candidate) > tol) return std::nullopt;
    return candidate;
  }

 private:
  MatrixXd coupling_;
  VectorXd noise_;
  VectorXd scale_;
  double cap_;
};

struct Bisection {
  bool feasible = false;
  bool hit_max_iters = false;
  double t = 0.0;
  VectorXd q;
  int steps = 0;
  int fixed_point_iterations = 0;
};

// Largest common SINR target reachable under the cap, for fixed weights. The bracket
// always starts at zero so the search path does not depend on `floor`.
Bisection bisect_common_target(const LinkGains<double>& g, double rho, double cap, double floor,
                               const TpcOptions& opts) {
  Bisection out;
  auto probe = [&](double t) {
    FixedPointResult r = feasible_powers(g, rho, t, cap, opts);
    out.fixed_point_iterations += r.iterations;
    if (r.status == FixedPointStatus::MaxIters) out.hit_max_iters = true;
    return r;
  };

  const int K = g.K();
  FixedPointResult base = probe(floor);
  if (base.status != FixedPointStatus::Feasible) return out;
  out.feasible = true;
  // A UE without useful signal caps the common target at zero.
  if ((g.signal.array() <= 0.0).any()) {
    out.q = base.q;
    return out;
  }

  double lo = 0.0;
  VectorXd q_lo = VectorXd::Zero(K);
  double hi = sinr(g, VectorXd::Constant(K, cap).eval(), rho).maxCoeff();
  if (hi > 0.0) {
    for (int j = 0; j < kMaxBracketDoublings; ++j) {
      FixedPointResult r = probe(hi);
      ++out.steps;
      if (r.status != FixedPointStatus::Feasible) break;
      lo = hi;
      q_lo = r.q;
      hi *= 2.0;
    }
    while (hi - lo > opts.bisection_tol * hi) {
      const double mid = 0.5 * (lo + hi);
      if (!(mid > lo && mid < hi)) break;
      FixedPointResult r = probe(mid);
      ++out.steps;
      if (r.status == FixedPointStatus::Feasible) {
        lo = mid;
        q_lo = r.q;
      } else {
        hi = mid;
      }
    }
  }
  if (lo < floor) {
    lo = floor;
    q_lo = base.q;
  }
  out.t = lo;
  out.q = q_lo;
  return out;
}

// Scales a minimal power profile up to the cap; all SINRs can only grow.
VectorXd fill_to_cap(const VectorXd& q, const LinkGains<double>& g, double cap) {
  const int K = static_cast<int>(q.size());
  VectorXd out(K);
  Eigen::Index top = 0;
  const double peak = q.maxCoeff(&top);
  if (!(peak > 0.0)) {
    for (int k = 0; k < K; ++k) out(k) = g.signal(k) > 0.0 ? cap : 0.0;
    return out;
  }
  out = (q * (cap / peak)).cwiseMin(cap).cwiseMax(0.0);
  out(top) = cap;
  return out;
}

LinkMetrics metrics_at(CombinerKind kind, const CMatrixXd& H_hat, const MatrixXd& err_var, const VectorXd& q,
                       double rho, const SystemConfig& config) {
  const CMatrixXd W = combiner_weights(kind, H_hat, err_var, q, rho);
  return link_metrics(link_gains(W, H_hat, err_var), q, rho, config);
}

void summarize(TpcResult& r) {
  r.diagnostics.min_se = r.metrics.se.size() ? r.metrics.se.minCoeff() : 0.0;
  r.diagnostics.min_ee = r.metrics.ee.size() ? r.metrics.ee.minCoeff() : 0.0;
}

TpcResult infeasible_result(TpcAlgorithm algorithm, TpcStatus status, int K, const SystemConfig& config) {
  TpcResult r;
  r.algorithm = algorithm;
  r.status = status;
  r.q = VectorXd::Zero(K);
  r.metrics.sinr = VectorXd::Zero(K);
  r.metrics.se = VectorXd::Zero(K);
  r.metrics.power = ue_power(r.q, config);
  r.metrics.ee = VectorXd::Zero(K);
  return r;
}

}  // namespace

void TpcOptions::validate() const {
  if (!(bisection_tol > 0.0) || !(fixed_point_tol > 0.0) || !(alternation_tol > 0.0))
    throw std::invalid_argument("TPC tolerances must be positive");
  if (max_fixed_point_iters < 1) throw std::invalid_argument("max_fixed_point_iters must be positive");
  if (alternations < 1) throw std::invalid_argument("alternations must be positive");
  if (!(hill_step_init > 0.0) || !(hill_step_min > 0.0) || hill_step_min > hill_step_init)
    throw std::invalid_argument("hill-climb steps must satisfy 0 < hill_step_min <= hill_step_init");
  if (max_hill_evaluations < 1) throw std::invalid_argument("max_hill_evaluations must be positive");
  if (!(target_se >= 0.0) || !std::isfinite(target_se)) throw std::invalid_argument("target_se must be >= 0");
}

std::string to_string(TpcStatus status) {
  switch (status) {
    case TpcStatus::Optimal: return "optimal";
    case TpcStatus::Infeasible: return "infeasible";
    case TpcStatus::MaxIters: return "max_iters";
  }
  return "unknown";
}

std::string to_string(TpcAlgorithm algorithm) {
  switch (algorithm) {
    case TpcAlgorithm::MaxPower: return "max_power";
    case TpcAlgorithm::MaxMinSe: return "max_min_se";
    case TpcAlgorithm::MaxMinEe: return "max_min_ee";
  }
  return "unknown";
}

TpcAlgorithm tpc_algorithm_from_string(const std::string& name) {
  if (name == "max_power") return TpcAlgorithm::MaxPower;
  if (name == "max_min_se") return TpcAlgorithm::MaxMinSe;
  if (name == "max_min_ee") return TpcAlgorithm::MaxMinEe;
  throw std::invalid_argument("unknown TPC algorithm '" + name + "' (expected max_power|max_min_se|max_min_ee)");
}

std::string to_string(CombinerKind kind) { return kind == CombinerKind::MMSE ? "MMSE" : "MR"; }

CombinerKind combiner_from_string(const std::string& name) {
  if (name == "MR" || name == "mr") return CombinerKind::MR;
  if (name == "MMSE" || name == "mmse") return CombinerKind::MMSE;
  throw std::invalid_argument("unknown combiner '" + name + "' (expected MR|MMSE)");
}

FixedPointResult feasible_powers(const LinkGains<double>& gains, double rho, double t, double cap,
                                 const TpcOptions& opts, std::vector<VectorXd>* trace) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("feasible_powers: SINR target must be >= 0");
  if (!(cap > 0.0 && cap <= 1.0)) throw std::invalid_argument("feasible_powers: cap must lie in (0, 1]");
  if (!(rho > 0.0)) throw std::invalid_argument("feasible_powers: rho must be positive");

  const int K = gains.K();
  FixedPointResult res;
  res.q = VectorXd::Zero(K);
  if (trace) trace->push_back(res.q);
  if (t == 0.0) {
    res.status = FixedPointStatus::Feasible;
    return res;
  }
  if ((gains.signal.array() <= 0.0).any()) {
    res.status = FixedPointStatus::Infeasible;
    return res;
  }

  const PowerUpdate update(gains, rho, t, cap);
  const double slack = 1.0 - 10.0 * opts.fixed_point_tol;
  const double overflow = cap / slack;
  VectorXd q = res.q;
  bool converged = false;
  for (int n = 1; n <= opts.max_fixed_point_iters && !converged; ++n) {
    res.iterations = n;
    const VectorXd d = update.demand(q);
    // Demands only grow along the iteration, so an overflow now persists at the limit.
    if ((d.array() > overflow).any()) {
      res.q = q;
      res.status = FixedPointStatus::Infeasible;
      return res;
    }
    const VectorXd next = d.cwiseMin(cap);
    converged = sup_distance(next, q) < opts.fixed_point_tol;
    q = next;
    if (trace) trace->push_back(q);
    if (!converged && n % kSettleInterval == 0) {
      const auto limit = update.uncapped_limit();
      // Iterates never exceed the uncapped limit, so a missing or oversized limit is final.
      if (!limit || limit->maxCoeff() > overflow) {
        res.q = q;
        res.status = FixedPointStatus::Infeasible;
        return res;
      }
      std::optional<VectorXd> settled;
      if (limit->maxCoeff() <= cap && (limit->array() >= q.array() - 1e-12).all() &&
          sup_distance(update.apply(*limit), *limit) <= opts.fixed_point_tol)
        settled = limit;
      else
        settled = update.settle(q, opts.fixed_point_tol);
      if (settled) {
        q = settled->cwiseMax(q);
        if (trace) trace->push_back(q);
        converged = true;
      }
    }
  }
  if (converged) {
    // The stopping rule is absolute; small profiles are finished off exactly.
    if (auto exact = update.settle(q, opts.fixed_point_tol)) q = exact->cwiseMax(q);
  }
  res.q = q;
  if (!converged) {
    res.status = FixedPointStatus::MaxIters;
    return res;
  }
  const VectorXd achieved = sinr(gains, q, rho);
  res.status = (achieved.array() >= t * slack).all() ? FixedPointStatus::Feasible : FixedPointStatus::Infeasible;
  return res;
}

FixedPointResult feasible_powers(const CMatrixXd& W, const CMatrixXd& H_hat, const MatrixXd& err_var, double rho,
                                 double t, double cap, const TpcOptions& opts) {
  return feasible_powers(link_gains(W, H_hat, err_var), rho, t, cap, opts);
}

CMatrixXd combiner_weights(CombinerKind kind, const CMatrixXd& H_hat, const MatrixXd& err_var, const VectorXd& q,
                           double rho) {
  if (kind == CombinerKind::MR) return mr_weights(H_hat).W;
  return mmse_directions<double>(H_hat, err_var, q, rho);
}

VectorXd max_power(int K) {
  if (K < 1) throw std::invalid_argument("max_power needs K >= 1");
  return VectorXd::Ones(K);
}

TpcResult run_max_power(const CMatrixXd& H_hat, const MatrixXd& err_var, double rho, CombinerKind kind,
                        const SystemConfig& config) {
  TpcResult r;
  r.algorithm = TpcAlgorithm::MaxPower;
  r.q = max_power(static_cast<int>(H_hat.cols()));
  r.metrics = metrics_at(kind, H_hat, err_var, r.q, rho, config);
  r.diagnostics.nu = 1.0;
  summarize(r);
  return r;
}

TpcResult max_min_se(const CMatrixXd& H_hat, const MatrixXd& err_var, double rho, CombinerKind kind,
                     const SystemConfig& config, const TpcOptions& opts, double cap, double sinr_floor,
                     const VectorXd& q_init) {
  opts.validate();
  const int K = static_cast<int>(H_hat.cols());
  if (!(cap > 0.0 && cap <= 1.0)) throw std::invalid_argument("max_min_se: cap must lie in (0, 1]");
  VectorXd q = q_init.size() == K ? q_init : VectorXd::Constant(K, cap).eval();

  TpcResult r;
  r.algorithm = TpcAlgorithm::MaxMinSe;
  bool have = false;
  for (int round = 0; round < rounds_for(kind, opts); ++round) {
    const CMatrixXd W = combiner_weights(kind, H_hat, err_var, q, rho);
    const LinkGains<double> g = link_gains(W, H_hat, err_var);
    const Bisection b = bisect_common_target(g, rho, cap, sinr_floor, opts);
    r.diagnostics.alternation_rounds = round + 1;
    r.diagnostics.bisection_steps += b.steps;
    r.diagnostics.fixed_point_iterations += b.fixed_point_iterations;
    if (b.hit_max_iters) r.status = TpcStatus::MaxIters;
    if (!b.feasible) {
      if (!have) {
        TpcResult bad = infeasible_result(TpcAlgorithm::MaxMinSe, TpcStatus::Infeasible, K, config);
        bad.diagnostics = r.diagnostics;
        return bad;
      }
      break;
    }
    const VectorXd next = fill_to_cap(b.q, g, cap);
    const double moved = sup_distance(next, q);
    q = next;
    have = true;
    r.diagnostics.sinr_target = b.t;
    if (moved < opts.alternation_tol) break;
  }
  r.q = q;
  r.metrics = metrics_at(kind, H_hat, err_var, q, rho, config);
  r.diagnostics.nu = cap;
  summarize(r);
  return r;
}

MinMaxPowerResult min_max_power(const CMatrixXd& H_hat, const MatrixXd& err_var, double rho, CombinerKind kind,
                                double target_se, const TpcOptions& opts) {
  if (!(target_se >= 0.0) || !std::isfinite(target_se)) throw std::invalid_argument("target_se must be >= 0");
  const int K = static_cast<int>(H_hat.cols());
  const double target = std::exp2(target_se) - 1.0;
  MinMaxPowerResult out;
  out.q = VectorXd::Zero(K);
  if (target == 0.0) {
    out.status = TpcStatus::Optimal;
    return out;
  }

  VectorXd q = VectorXd::Ones(K);
  bool have = false;
  for (int round = 0; round < rounds_for(kind, opts); ++round) {
    const CMatrixXd W = combiner_weights(kind, H_hat, err_var, q, rho);
    const FixedPointResult fp = feasible_powers(link_gains(W, H_hat, err_var), rho, target, 1.0, opts);
    out.fixed_point_iterations += fp.iterations;
    if (fp.status != FixedPointStatus::Feasible) {
      if (!have) {
        out.status = fp.status == FixedPointStatus::MaxIters ? TpcStatus::MaxIters : TpcStatus::Infeasible;
        return out;
      }
      break;
    }
    const double moved = sup_distance(fp.q, q);
    q = fp.q;
    have = true;
    if (moved < opts.alternation_tol) break;
  }
  // The fixed point is the componentwise-minimal feasible profile, so the smallest
  // feasible cap is its largest entry.
  out.status = TpcStatus::Optimal;
  out.q = q;
  out.nu_star = q.maxCoeff();
  return out;
}

TpcResult max_min_ee(const CMatrixXd& H_hat, const MatrixXd& err_var, double rho, CombinerKind kind,
                     const SystemConfig& config, const TpcOptions& opts) {
  opts.validate();
  const int K = static_cast<int>(H_hat.cols());
  const double floor = std::exp2(opts.target_se) - 1.0;

  const MinMaxPowerResult base = min_max_power(H_hat, err_var, rho, kind, opts.target_se, opts);
  if (base.status != TpcStatus::Optimal) {
    TpcResult bad = infeasible_result(TpcAlgorithm::MaxMinEe, base.status, K, config);
    bad.diagnostics.sinr_target = floor;
    bad.diagnostics.fixed_point_iterations = base.fixed_point_iterations;
    return bad;
  }

  struct Point {
    double nu = 0.0;
    double score = -std::numeric_limits<double>::infinity();
    double actual = -std::numeric_limits<double>::infinity();
    TpcResult result;
  };

  TpcDiagnostics totals;
  totals.fixed_point_iterations = base.fixed_point_iterations;
  auto evaluate = [&](double nu) {
    Point p;
    p.nu = nu;
    ++totals.hill_evaluations;
    if (!(nu > 0.0)) {
      p.result = infeasible_result(TpcAlgorithm::MaxMinEe, TpcStatus::Optimal, K, config);
      p.score = p.actual = 0.0;
      return p;
    }
    p.result = max_min_se(H_hat, err_var, rho, kind, config, opts, nu, floor, base.q);
    totals.bisection_steps += p.result.diagnostics.bisection_steps;
    totals.fixed_point_iterations += p.result.diagnostics.fixed_point_iterations;
    totals.alternation_rounds += p.result.diagnostics.alternation_rounds;
    if (p.result.status == TpcStatus::Infeasible) return p;
    p.score = config.bandwidth * p.result.metrics.se.minCoeff() / (config.p_max * nu + config.p_circuit);
    p.actual = p.result.metrics.ee.minCoeff();
    return p;
  };

  const double lo = base.nu_star;
  Point current = evaluate(lo);
  Point best = current;
  auto consider = [&](const Point& p) {
    if (p.actual > best.actual) best = p;
  };

  bool exhausted = false;
  double step = opts.hill_step_init;
  double nu = lo;
  double previous = current.score;
  while (std::abs(step) >= opts.hill_step_min) {
    const double next = std::clamp(nu + step, lo, 1.0);
    if (next == nu) {
      step = -step / 2.0;
      continue;
    }
    if (totals.hill_evaluations >= opts.max_hill_evaluations) {
      exhausted = true;
      break;
    }
    const Point p = evaluate(next);
    consider(p);
    nu = next;
    if (p.score < previous) step = -step / 2.0;
    previous = p.score;
  }
  if (lo < 1.0 && !exhausted) consider(evaluate(1.0));

  TpcResult r = best.result;
  r.algorithm = TpcAlgorithm::MaxMinEe;
  if (r.status == TpcStatus::Infeasible) {
    // Every probe failed; nu* itself is feasible by construction, so this is numerical.
    r = infeasible_result(TpcAlgorithm::MaxMinEe, TpcStatus::MaxIters, K, config);
  } else if (exhausted) {
    r.status = TpcStatus::MaxIters;
  }
  r.diagnostics.fixed_point_iterations = totals.fixed_point_iterations;
  r.diagnostics.bisection_steps = totals.bisection_steps;
  r.diagnostics.alternation_rounds = totals.alternation_rounds;
  r.diagnostics.hill_evaluations = totals.hill_evaluations;
  r.diagnostics.nu_star = base.nu_star;
  r.diagnostics.nu = best.nu;
  r.diagnostics.sinr_target = floor;
  summarize(r);
  return r;
}

TpcResult run_tpc(TpcAlgorithm algorithm, const CMatrixXd& H_hat, const MatrixXd& err_var, double rho,
                  CombinerKind kind, const SystemConfig& config, const TpcOptions& opts) {
  switch (algorithm) {
    case TpcAlgorithm::MaxPower: return run_max_power(H_hat, err_var, rho, kind, config);
    case TpcAlgorithm::MaxMinSe: return max_min_se(H_hat, err_var, rho, kind, config, opts);
    case TpcAlgorithm::MaxMinEe: return max_min_ee(H_hat, err_var, rho, kind, config, opts);
  }
  throw std::invalid_argument("unknown TPC algorithm");
}

OracleResult brute_force_oracle(const CMatrixXd& H_hat, const MatrixXd& err_var, double rho, CombinerKind kind,
                                OracleObjective objective, double target_se, int grid_points,
                                const SystemConfig& config) {
  const int K = static_cast<int>(H_hat.cols());
  if (K > 3) throw TooManyUEs("brute-force oracle supports at most 3 UEs");
  if (K < 1) throw std::invalid_argument("brute-force oracle needs K >= 1");
  if (grid_points < 2) throw std::invalid_argument("brute-force oracle needs at least 2 grid points");

  const CMatrixXd W = combiner_weights(kind, H_hat, err_var, VectorXd::Ones(K), rho);
  const LinkGains<double> g = link_gains(W, H_hat, err_var);

  OracleResult best;
  best.objective = -std::numeric_limits<double>::infinity();
  std::vector<int> idx(K, 0);
  VectorXd q(K);
  const double h = 1.0 / (grid_points - 1);
  while (true) {
    for (int k = 0; k < K; ++k) q(k) = idx[k] == grid_points - 1 ? 1.0 : idx[k] * h;
    const VectorXd se = spectral_efficiency(sinr(g, q, rho));
    bool ok = true;
    double value = se.minCoeff();
    if (objective == OracleObjective::MinEe) {
      ok = se.minCoeff() >= target_se;
      value = energy_efficiency(se, q, config).minCoeff();
    }
    if (ok && value > best.objective) {
      best.feasible = true;
      best.objective = value;
      best.q = q;
    }
    int k = 0;
    while (k < K && ++idx[k] == grid_points) idx[k++] = 0;
    if (k == K) break;
  }
  if (!best.feasible) best.objective = 0.0;
  return best;
}

}  // namespace cfmimo
