// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <limits>

#include "cfmimo/types.hpp"

namespace cfmimo {

template <typename Real = double>
struct CombinerBank {
  CombinerKind kind = CombinerKind::MR;
  /// Column k is the receive weight vector w_k.
  CMatrix<Real> W;
};

template <typename Real>
CombinerBank<Real> mr_weights(const CMatrix<Real>& H_hat) {
  return {CombinerKind::MR, H_hat};
}

template <typename Real>
Real mmse_residual_tolerance() {
  return std::max(Real(1e-8), Real(1e3) * std::numeric_limits<Real>::epsilon());
}

/// Solves A X = B for all columns at once, where
/// A = sum_i rho q_i (h_i h_i^H + C_i) + I with diagonal C_i.
/// `B` defaults to H_hat, which yields the unscaled MMSE directions.
template <typename Real>
CMatrix<Real> mmse_solve(const CMatrix<Real>& H_hat, const RMatrix<Real>& err_var, const RVector<Real>& q, Real rho,
                         const CMatrix<Real>& B) {
  const Eigen::Index M = H_hat.rows();
  if (err_var.rows() != M || err_var.cols() != H_hat.cols() || q.size() != H_hat.cols() || B.rows() != M)
    throw std::invalid_argument("mmse_solve: inconsistent shapes");
  if (!(rho > Real(0))) throw std::invalid_argument("mmse_solve: rho must be positive");

  const RVector<Real> load = rho * q;
  CMatrix<Real> A = H_hat * load.template cast<std::complex<Real>>().asDiagonal() * H_hat.adjoint();
  const RVector<Real> diag = err_var * load;
  for (Eigen::Index m = 0; m < M; ++m) A(m, m) += std::complex<Real>(diag(m) + Real(1), Real(0));

  const Eigen::LLT<CMatrix<Real>> llt(A);
  if (llt.info() != Eigen::Success) throw NumericalFailure("MMSE system is not positive definite");
  CMatrix<Real> X = llt.solve(B);

  const Real tol = mmse_residual_tolerance<Real>();
  auto worst_residual = [&](const CMatrix<Real>& R) {
    Real worst = 0;
    for (Eigen::Index k = 0; k < B.cols(); ++k) {
      const Real scale = B.col(k).norm();
      if (scale > Real(0)) worst = std::max(worst, R.col(k).norm() / scale);
    }
    return worst;
  };
  CMatrix<Real> R = B - A * X;
  if (worst_residual(R) > tol) {
    X += llt.solve(R);  // one step of iterative refinement
    R = B - A * X;
    if (worst_residual(R) > tol) throw NumericalFailure("MMSE solve residual above tolerance");
  }
  return X;
}

/// Unit-free MMSE directions A^{-1} h_k. SINR is invariant to the per-column scale,
/// so power-control loops use these to keep weights of silent UEs well defined.
template <typename Real>
CMatrix<Real> mmse_directions(const CMatrix<Real>& H_hat, const RMatrix<Real>& err_var, const RVector<Real>& q,
                              Real rho) {
  return mmse_solve(H_hat, err_var, q, rho, H_hat);
}

/// w_k = rho q_k A^{-1} h_k.
template <typename Real>
CombinerBank<Real> mmse_weights(const CMatrix<Real>& H_hat, const RMatrix<Real>& err_var, const RVector<Real>& q,
                                Real rho) {
  if ((q.array() < Real(0)).any() || (q.array() > Real(1)).any())
    throw std::invalid_argument("mmse_weights: q must lie in [0, 1]");
  const CMatrix<Real> rhs = H_hat * (rho * q).template cast<std::complex<Real>>().asDiagonal();
  return {CombinerKind::MMSE, mmse_solve(H_hat, err_var, q, rho, rhs)};
}

}  // namespace cfmimo
