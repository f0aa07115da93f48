// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "cfmimo/metrics.hpp"
#include "cfmimo/types.hpp"

namespace cfmimo {

struct TpcOptions {
  /// Relative width at which bisections on the SINR target stop.
  double bisection_tol = 1e-9;
  /// Sup-norm step at which the power fixed point is declared converged.
  double fixed_point_tol = 1e-10;
  int max_fixed_point_iters = 20000;
  /// Weight/power rounds for MMSE combining; MR always uses one.
  int alternations = 5;
  double alternation_tol = 1e-4;
  double hill_step_init = 0.1;
  double hill_step_min = 1e-4;
  int max_hill_evaluations = 500;
  /// Required minimum SE for max-min EE, bits/s/Hz.
  double target_se = 1.0;

  void validate() const;
};

enum class TpcStatus { Optimal, Infeasible, MaxIters };
enum class TpcAlgorithm { MaxPower, MaxMinSe, MaxMinEe };

std::string to_string(TpcStatus status);
std::string to_string(TpcAlgorithm algorithm);
TpcAlgorithm tpc_algorithm_from_string(const std::string& name);

struct TpcDiagnostics {
  int fixed_point_iterations = 0;
  int bisection_steps = 0;
  int alternation_rounds = 0;
  int hill_evaluations = 0;
  double sinr_target = 0.0;
  double nu_star = 0.0;
  double nu = 0.0;
  double min_se = 0.0;
  double min_ee = 0.0;
};

struct TpcResult {
  TpcAlgorithm algorithm = TpcAlgorithm::MaxPower;
  TpcStatus status = TpcStatus::Optimal;
  VectorXd q;
  LinkMetrics metrics;
  TpcDiagnostics diagnostics;
};

enum class FixedPointStatus { Feasible, Infeasible, MaxIters };

struct FixedPointResult {
  FixedPointStatus status = FixedPointStatus::Infeasible;
  VectorXd q;
  int iterations = 0;
};

/// Minimal power vector meeting SINR target `t` for every UE under q_k <= cap, for fixed
/// weights. Iterates q <- min(cap, t D(q) / (rho signal)) from q = 0. The sequence is
/// nondecreasing; once the active set settles the limit is obtained by a linear solve.
/// `trace`, when given, receives every iterate.
FixedPointResult feasible_powers(const LinkGains<double>& gains, double rho, double t, double cap,
                                 const TpcOptions& opts, std::vector<VectorXd>* trace = nullptr);
FixedPointResult feasible_powers(const CMatrixXd& W, const CMatrixXd& H_hat, const MatrixXd& err_var, double rho,
                                 double t, double cap, const TpcOptions& opts);

/// Receive weights for `kind` at power vector q (MMSE columns are unscaled directions).
CMatrixXd combiner_weights(CombinerKind kind, const CMatrixXd& H_hat, const MatrixXd& err_var, const VectorXd& q,
                           double rho);

VectorXd max_power(int K);

TpcResult run_max_power(const CMatrixXd& H_hat, const MatrixXd& err_var, double rho, CombinerKind kind,
                        const SystemConfig& config);

/// Max-min SE by bisection on the common SINR target, under q_k <= cap.
/// MMSE weights are refreshed between rounds starting from `q_init` (all-cap when empty).
/// The returned q is rescaled so that max_k q_k = cap.
TpcResult max_min_se(const CMatrixXd& H_hat, const MatrixXd& err_var, double rho, CombinerKind kind,
                     const SystemConfig& config, const TpcOptions& opts, double cap = 1.0,
                     double sinr_floor = 0.0, const VectorXd& q_init = {});

struct MinMaxPowerResult {
  TpcStatus status = TpcStatus::Infeasible;
  double nu_star = 0.0;
  VectorXd q;
  int fixed_point_iterations = 0;
};

/// Smallest common power cap nu* at which every UE reaches `target_se`.
MinMaxPowerResult min_max_power(const CMatrixXd& H_hat, const MatrixXd& err_var, double rho, CombinerKind kind,
                                double target_se, const TpcOptions& opts);

/// Max-min EE subject to the SE floor opts.target_se: hill climbing on the cap nu over
/// [nu*, 1], scoring bandwidth min_k S_k / (p_max nu + p_circuit).
TpcResult max_min_ee(const CMatrixXd& H_hat, const MatrixXd& err_var, double rho, CombinerKind kind,
                     const SystemConfig& config, const TpcOptions& opts);

TpcResult run_tpc(TpcAlgorithm algorithm, const CMatrixXd& H_hat, const MatrixXd& err_var, double rho,
                  CombinerKind kind, const SystemConfig& config, const TpcOptions& opts);

enum class OracleObjective { MinSe, MinEe };

struct OracleResult {
  bool feasible = false;
  VectorXd q;
  double objective = 0.0;
};

/// Exhaustive search over {0, 1/(G-1), ..., 1}^K with weights fixed at q = 1. K <= 3.
OracleResult brute_force_oracle(const CMatrixXd& H_hat, const MatrixXd& err_var, double rho, CombinerKind kind,
                                OracleObjective objective, double target_se, int grid_points,
                                const SystemConfig& config);

}  // namespace cfmimo
