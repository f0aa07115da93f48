// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "cfmimo/channel.hpp"
#include "cfmimo/estimation.hpp"

using namespace cfmimo;

TEST_CASE("pilot books are orthonormal") {
  const auto two = make_pilots<double>(2, 2);
  CHECK(std::abs(two.phi.col(0).dot(two.phi.col(1))) < 1e-15);
  for (int tau : {1, 3, 7}) CHECK(make_pilots<double>(1, tau).phi.col(0).norm() == doctest::Approx(1.0));
  const auto eight = make_pilots<double>(8, 8);
  CHECK((eight.phi.adjoint() * eight.phi - CMatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-14);
  const auto tall = make_pilots<double>(3, 10);
  CHECK((tall.phi.adjoint() * tall.phi - CMatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(tall.K() == 3);
  CHECK(tall.tau_p == 10);
  CHECK_THROWS_AS(make_pilots<double>(4, 3), TauTooSmall);
  const auto f = make_pilots<float>(4, 4);
  CHECK((f.phi.adjoint() * f.phi - CMatrix<float>::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-6f);
}

TEST_CASE("noiseless single-UE pilot reception") {
  Rng rng(1);
  const CMatrixXd H = draw_small_scale<double>(5, 1, rng);
  const auto pilots = make_pilots<double>(1, 3);
  const CMatrixXd Y = simulate_pilot_rx<double>(H, pilots, 7.0, rng, true);
  const CMatrixXd expected = std::sqrt(7.0 * 3.0) * H * pilots.phi.transpose();
  CHECK((Y - expected).norm() < 1e-12);
}

TEST_CASE("pilot noise has unit variance and stays unit variance after projection") {
  Rng rng(2);
  const int M = 50000;
  const auto pilots = make_pilots<double>(2, 2);
  const CMatrixXd Y = simulate_pilot_rx<double>(CMatrixXd::Zero(M, 2), pilots, 10.0, rng);
  CHECK(Y.cwiseAbs2().mean() == doctest::Approx(1.0).epsilon(0.02));
  const CMatrixXd projected = Y * pilots.phi.conjugate();
  CHECK(projected.col(0).cwiseAbs2().mean() == doctest::Approx(1.0).epsilon(0.02));
  CHECK(projected.col(1).cwiseAbs2().mean() == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("projection isolates each UE under orthogonal pilots") {
  Rng rng(3);
  const CMatrixXd H = draw_small_scale<double>(4, 3, rng);
  const auto pilots = make_pilots<double>(3, 3);
  const CMatrixXd Y = simulate_pilot_rx<double>(H, pilots, 2.0, rng, true);
  const CMatrixXd projected = Y * pilots.phi.conjugate();
  CHECK((projected - std::sqrt(6.0) * H).norm() < 1e-12);
}

TEST_CASE("estimate variance worked example") {
  CHECK(estimate_variance(100.0, 0.01) == doctest::Approx(0.005));
  const auto pilots = make_pilots<double>(1, 1);
  const MatrixXd beta = MatrixXd::Constant(1, 1, 0.01);
  const auto est = mmse_estimate<double>(CMatrixXd::Ones(1, 1), beta, pilots, 100.0);
  CHECK(est.err_var(0, 0) == doctest::Approx(0.005));
  CHECK(est.H_hat(0, 0).real() == doctest::Approx(10.0 * 0.01 / 2.0));
}

TEST_CASE("zero large-scale gain gives a zero estimate and zero error") {
  Rng rng(4);
  const auto pilots = make_pilots<double>(2, 2);
  MatrixXd beta(2, 2);
  beta << 0.0, 1e-9, 1e-10, 0.0;
  const CMatrixXd H = realize<double>(beta, draw_small_scale<double>(2, 2, rng));
  const auto est = mmse_estimate<double>(simulate_pilot_rx<double>(H, pilots, 1e10, rng), beta, pilots, 1e10);
  CHECK(est.H_hat(0, 0) == std::complex<double>(0.0));
  CHECK(est.H_hat(1, 1) == std::complex<double>(0.0));
  CHECK(est.err_var(0, 0) == 0.0);
  CHECK(est.err_var(1, 1) == 0.0);
}

TEST_CASE("very high pilot SNR makes the estimate nearly perfect") {
  Rng rng(5);
  const auto pilots = make_pilots<double>(2, 2);
  const MatrixXd beta = MatrixXd::Constant(3, 2, 0.5);
  const CMatrixXd H = realize<double>(beta, draw_small_scale<double>(3, 2, rng));
  const auto est = mmse_estimate<double>(simulate_pilot_rx<double>(H, pilots, 0.5e12, rng), beta, pilots, 0.5e12);
  CHECK((est.err_var.array() / beta.array()).maxCoeff() < 1e-9);
  CHECK((est.H_hat - H).norm() / H.norm() < 1e-5);
}

TEST_CASE("MMSE estimate is unbiased in variance and orthogonal to its error") {
  Rng rng(6);
  const int draws = 100000;
  const auto pilots = make_pilots<double>(2, 2);
  MatrixXd beta(1, 2);
  beta << 1.0, 0.25;
  const double snr = 1.0 * 2;
  std::vector<std::complex<double>> cross;
  cross.reserve(draws);
  double var0 = 0.0, var1 = 0.0;
  for (int d = 0; d < draws; ++d) {
    const CMatrixXd H = realize<double>(beta, draw_small_scale<double>(1, 2, rng));
    const auto est = mmse_estimate<double>(simulate_pilot_rx<double>(H, pilots, 1.0, rng), beta, pilots, 1.0);
    var0 += std::norm(est.H_hat(0, 0));
    var1 += std::norm(est.H_hat(0, 1));
    cross.push_back(est.H_hat(0, 0) * std::conj(H(0, 0) - est.H_hat(0, 0)));
  }
  CHECK(var0 / draws == doctest::Approx(estimate_variance(snr, 1.0)).epsilon(0.02));
  CHECK(var1 / draws == doctest::Approx(estimate_variance(snr, 0.25)).epsilon(0.02));

  std::complex<double> m{0.0, 0.0};
  for (const auto& c : cross) m += c;
  m /= static_cast<double>(draws);
  double s2 = 0.0;
  for (const auto& c : cross) s2 += std::norm(c - m);
  const double se = std::sqrt(s2 / (draws - 1) / draws);
  CHECK(std::abs(m) < 3.0 * se);
}

TEST_CASE("error variance lies in [0, beta] on random inputs") {
  Rng rng(7);
  std::uniform_real_distribution<double> expo(-14.0, 0.0), snr_expo(-3.0, 13.0);
  std::uniform_int_distribution<int> dim(1, 6);
  for (int trial = 0; trial < 200; ++trial) {
    const int M = dim(rng), K = dim(rng);
    MatrixXd beta(M, K);
    for (Eigen::Index j = 0; j < beta.size(); ++j) beta.data()[j] = std::pow(10.0, expo(rng));
    const double rho_p = std::pow(10.0, snr_expo(rng));
    const auto pilots = make_pilots<double>(K, K + trial % 3);
    const CMatrixXd H = realize<double>(beta, draw_small_scale<double>(M, K, rng));
    const auto est = mmse_estimate<double>(simulate_pilot_rx<double>(H, pilots, rho_p, rng), beta, pilots, rho_p);
    CHECK((est.err_var.array() >= 0.0).all());
    CHECK((est.err_var.array() <= beta.array()).all());
    CHECK(est.H_hat.allFinite());
  }
}

TEST_CASE("perfect CSI is an identity copy with zero error") {
  Rng rng(8);
  for (int trial = 0; trial < 3; ++trial) {
    const CMatrixXd H = draw_small_scale<double>(3 + trial, 2, rng);
    const auto est = perfect_csi<double>(H);
    CHECK(est.H_hat == H);
    CHECK(est.err_var.isZero(0.0));
  }
}
