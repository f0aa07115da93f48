// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "cfmimo/random.hpp"
#include "cfmimo/types.hpp"

namespace cfmimo {

/// K unit-norm pilot sequences of length tau_p stored as the columns of `phi`.
template <typename Real = double>
struct PilotBook {
  int tau_p = 0;
  CMatrix<Real> phi;

  int K() const { return static_cast<int>(phi.cols()); }
};

/// Columns of the normalized tau_p-point DFT matrix, truncated to K sequences.
template <typename Real = double>
PilotBook<Real> make_pilots(int K, int tau_p) {
  if (K < 1) throw std::invalid_argument("make_pilots needs K >= 1");
  if (tau_p < K) throw TauTooSmall("orthogonal pilots need tau_p >= K");
  PilotBook<Real> book{tau_p, CMatrix<Real>(tau_p, K)};
  const Real scale = Real(1) / std::sqrt(static_cast<Real>(tau_p));
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < tau_p; ++j) {
      // Reduce j*k modulo tau_p before the trig call to keep the phase exact.
      const Real phase = Real(-2) * std::numbers::pi_v<Real> * static_cast<Real>((j * k) % tau_p) / tau_p;
      book.phi(j, k) = std::polar(scale, phase);
    }
  return book;
}

/// Received pilot block, one row per antenna: Y = sqrt(rho_p tau_p) H Phi^T + Z with Z ~ CN(0, 1).
template <typename Real>
CMatrix<Real> simulate_pilot_rx(const CMatrix<Real>& H, const PilotBook<Real>& pilots, Real rho_p, Rng& rng,
                                bool noiseless = false) {
  if (H.cols() != pilots.phi.cols()) throw std::invalid_argument("simulate_pilot_rx: H and pilot book disagree on K");
  CMatrix<Real> Y = std::sqrt(rho_p * pilots.tau_p) * (H * pilots.phi.transpose());
  if (!noiseless) {
    std::normal_distribution<Real> normal(Real(0), std::sqrt(Real(0.5)));
    for (Eigen::Index j = 0; j < Y.cols(); ++j)
      for (Eigen::Index m = 0; m < Y.rows(); ++m) {
        const Real re = normal(rng);
        const Real im = normal(rng);
        Y(m, j) += std::complex<Real>(re, im);
      }
  }
  return Y;
}

template <typename Real = double>
struct ChannelEstimate {
  CMatrix<Real> H_hat;
  /// Diagonal of the error covariance C_k, per antenna (M x K).
  RMatrix<Real> err_var;
};

/// Linear MMSE estimate from the pilot block given genie large-scale fading.
template <typename Real>
ChannelEstimate<Real> mmse_estimate(const CMatrix<Real>& pilot_rx, const RMatrix<Real>& beta,
                                    const PilotBook<Real>& pilots, Real rho_p) {
  if (pilot_rx.rows() != beta.rows() || beta.cols() != pilots.phi.cols() || pilot_rx.cols() != pilots.tau_p)
    throw std::invalid_argument("mmse_estimate: inconsistent shapes");
  const Real snr = rho_p * static_cast<Real>(pilots.tau_p);
  const RMatrix<Real> overlap = (pilots.phi.adjoint() * pilots.phi).cwiseAbs2();
  const RMatrix<Real> denom = (snr * (beta * overlap)).array() + Real(1);
  const CMatrix<Real> projected = pilot_rx * pilots.phi.conjugate();

  ChannelEstimate<Real> est;
  const RMatrix<Real> coeff = (std::sqrt(snr) * beta.array() / denom.array()).matrix();
  est.H_hat = (projected.array() * coeff.template cast<std::complex<Real>>().array()).matrix();
  const RMatrix<Real> gamma = (snr * beta.array().square() / denom.array()).matrix();
  est.err_var = (beta - gamma).cwiseMax(Real(0));
  return est;
}

/// Variance of the MMSE estimate under orthogonal pilots: rho_p tau_p beta^2 / (rho_p tau_p beta + 1).
template <typename Real>
Real estimate_variance(Real rho_p_tau_p, Real beta) {
  return rho_p_tau_p * beta * beta / (rho_p_tau_p * beta + Real(1));
}

template <typename Real>
ChannelEstimate<Real> perfect_csi(const CMatrix<Real>& H) {
  return {H, RMatrix<Real>::Zero(H.rows(), H.cols())};
}

}  // namespace cfmimo
