// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <optional>

#include "cfmimo/types.hpp"

namespace cfmimo {

inline constexpr double kBoltzmann = 1.380649e-23;

/// Radio constants shared by every drop.
struct SystemConfig {
  double bandwidth = 20e6;          // Hz
  double noise_temperature = 290.0; // K
  double noise_figure = 7.0;        // dB
  double p_max = 0.2;               // W, maximum UE transmit power
  double p_circuit = 0.1;           // W, UE circuit power
  std::optional<double> rho;        // transmit SNR; derived from the constants when unset
  std::optional<double> rho_p;      // pilot SNR; defaults to rho
  std::optional<int> tau_p;         // pilot length; defaults to K

  void validate() const;
};

/// k_B T B 10^(NF/10), in watts.
double noise_power(const SystemConfig& config);

/// p_max over the receiver noise power, unless overridden in the config.
double transmit_snr(const SystemConfig& config);
double pilot_snr(const SystemConfig& config);
int pilot_length(const SystemConfig& config, int K);

/// Per-UE quantities that fix the SINR as a function of q for given weights:
///   SINR_k(q) = rho q_k signal_k / (rho sum_{k'!=k} q_k' cross(k,k') + rho sum_i q_i error(k,i) + noise_k).
template <typename Real = double>
struct LinkGains {
  RVector<Real> signal;   // |w_k^H h_k|^2
  RMatrix<Real> cross;    // |w_k^H h_k'|^2, zero diagonal
  RMatrix<Real> error;    // sum_m err_var(m,i) |w_k(m)|^2
  RVector<Real> noise;    // ||w_k||^2

  int K() const { return static_cast<int>(signal.size()); }
};

template <typename Real>
LinkGains<Real> link_gains(const CMatrix<Real>& W, const CMatrix<Real>& H_hat, const RMatrix<Real>& err_var) {
  if (W.rows() != H_hat.rows() || W.cols() != H_hat.cols() || err_var.rows() != H_hat.rows() ||
      err_var.cols() != H_hat.cols())
    throw std::invalid_argument("link_gains: inconsistent shapes");
  LinkGains<Real> g;
  const RMatrix<Real> coupling = (W.adjoint() * H_hat).cwiseAbs2();
  g.signal = coupling.diagonal();
  g.cross = coupling;
  g.cross.diagonal().setZero();
  g.error = W.cwiseAbs2().transpose() * err_var;
  g.noise = W.colwise().squaredNorm().transpose();
  return g;
}

/// Denominator of SINR_k at power vector q.
template <typename Real>
Real sinr_denominator(const LinkGains<Real>& g, const RVector<Real>& q, Real rho, int k) {
  return rho * g.cross.row(k).dot(q) + rho * g.error.row(k).dot(q) + g.noise(k);
}

template <typename Real>
RVector<Real> sinr(const LinkGains<Real>& g, const RVector<Real>& q, Real rho) {
  if (q.size() != g.K()) throw std::invalid_argument("sinr: q has the wrong length");
  RVector<Real> out(g.K());
  for (int k = 0; k < g.K(); ++k) {
    const Real num = rho * q(k) * g.signal(k);
    out(k) = num > Real(0) ? num / sinr_denominator(g, q, rho, k) : Real(0);
  }
  return out;
}

template <typename Real>
RVector<Real> spectral_efficiency(const RVector<Real>& sinr_values) {
  return sinr_values.unaryExpr([](Real s) { return std::log2(Real(1) + s); });
}

template <typename Real = double>
struct SinrSe {
  RVector<Real> sinr;
  RVector<Real> se;
};

/// Closed-form SINR and SE of every UE for combiner W. A zero weight column gives SINR 0.
template <typename Real>
SinrSe<Real> sinr_and_se(const CMatrix<Real>& W, const CMatrix<Real>& H_hat, const RMatrix<Real>& err_var,
                         const RVector<Real>& q, Real rho) {
  const auto g = link_gains(W, H_hat, err_var);
  SinrSe<Real> out;
  out.sinr = sinr(g, q, rho);
  out.se = spectral_efficiency(out.sinr);
  return out;
}

/// P_k = p_max q_k + p_circuit.
inline VectorXd ue_power(const VectorXd& q, const SystemConfig& config) {
  return (config.p_max * q.array() + config.p_circuit).matrix();
}

/// E_k = bandwidth S_k / P_k in bit/J.
inline VectorXd energy_efficiency(const VectorXd& se, const VectorXd& q, const SystemConfig& config) {
  if (se.size() != q.size()) throw std::invalid_argument("energy_efficiency: size mismatch");
  return (config.bandwidth * se.array() / ue_power(q, config).array()).matrix();
}

struct LinkMetrics {
  VectorXd sinr;
  VectorXd se;
  VectorXd power;
  VectorXd ee;
};

LinkMetrics link_metrics(const LinkGains<double>& gains, const VectorXd& q, double rho, const SystemConfig& config);

}  // namespace cfmimo
