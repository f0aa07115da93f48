// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/metrics.hpp"

namespace cfmimo {

void SystemConfig::validate() const {
  if (!(bandwidth > 0.0)) throw std::invalid_argument("bandwidth must be positive");
  if (!(noise_temperature > 0.0)) throw std::invalid_argument("noise temperature must be positive");
  if (!std::isfinite(noise_figure)) throw std::invalid_argument("noise figure must be finite");
  if (!(p_max > 0.0)) throw std::invalid_argument("p_max must be positive");
  if (!(p_circuit > 0.0)) throw std::invalid_argument("p_circuit must be positive");
  if (rho && !(*rho > 0.0)) throw std::invalid_argument("rho must be positive");
  if (rho_p && !(*rho_p > 0.0)) throw std::invalid_argument("rho_p must be positive");
  if (tau_p && *tau_p < 1) throw std::invalid_argument("tau_p must be positive");
}

double noise_power(const SystemConfig& config) {
  return kBoltzmann * config.noise_temperature * config.bandwidth * std::pow(10.0, config.noise_figure / 10.0);
}

double transmit_snr(const SystemConfig& config) {
  if (config.rho) return *config.rho;
  return config.p_max / noise_power(config);
}

double pilot_snr(const SystemConfig& config) { return config.rho_p ? *config.rho_p : transmit_snr(config); }

int pilot_length(const SystemConfig& config, int K) { return config.tau_p ? *config.tau_p : K; }

LinkMetrics link_metrics(const LinkGains<double>& gains, const VectorXd& q, double rho, const SystemConfig& config) {
  LinkMetrics out;
  out.sinr = sinr(gains, q, rho);
  out.se = spectral_efficiency(out.sinr);
  out.power = ue_power(q, config);
  out.ee = energy_efficiency(out.se, q, config);
  return out;
}

}  // namespace cfmimo
