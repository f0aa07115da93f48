// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "cfmimo/random.hpp"
#include "cfmimo/scenario.hpp"
#include "cfmimo/types.hpp"

namespace cfmimo {

/// Log-distance path loss with log-normal shadowing:
/// L(d) = intercept + slope * log10(d / reference_distance), shadowing X ~ N(0, shadow_sigma^2) in dB.
struct PathLossModel {
  double intercept = 30.5;
  double slope = 36.7;
  double reference_distance = 1.0;
  double shadow_sigma = 4.0;

  void validate() const;

  /// Literature model: 30.5 + 36.7 log10(d), 4 dB shadowing.
  static PathLossModel literature() { return {30.5, 36.7, 1.0, 4.0}; }
  /// Model fitted to the measured campaign: 68.3568 + 52.3 log10(d / 25), 9 dB shadowing.
  static PathLossModel adjusted() { return {68.3568, 52.3, 25.0, 9.0}; }
  static PathLossModel preset(const std::string& name);
};

inline constexpr double kDefaultIndoorPenaltyDb = 20.0;

/// Path loss in dB. Distances below the reference distance are clamped to it.
double path_loss_db(const PathLossModel& model, double distance);

/// Large-scale fading beta (M x K). Shadowing is drawn once per (AP, UE) pair and
/// shared by the AP's antennas; indoor UEs lose another `indoor_penalty_db`.
MatrixXd draw_large_scale(const Topology& topology, const PathLossModel& model, Rng& rng,
                          double indoor_penalty_db = kDefaultIndoorPenaltyDb);

/// I.i.d. CN(0, 1) small-scale fading.
template <typename Real = double>
CMatrix<Real> draw_small_scale(int M, int K, Rng& rng) {
  if (M < 1 || K < 1) throw std::invalid_argument("draw_small_scale needs M, K >= 1");
  std::normal_distribution<Real> normal(Real(0), std::sqrt(Real(0.5)));
  CMatrix<Real> g(M, K);
  // Column-major fill so the stream order is independent of Eigen's storage flags.
  for (int k = 0; k < K; ++k)
    for (int m = 0; m < M; ++m) {
      const Real re = normal(rng);
      const Real im = normal(rng);
      g(m, k) = {re, im};
    }
  return g;
}

/// h = sqrt(beta) * g elementwise.
template <typename Real>
CMatrix<Real> realize(const RMatrix<Real>& beta, const CMatrix<Real>& g) {
  if (beta.rows() != g.rows() || beta.cols() != g.cols())
    throw std::invalid_argument("realize: beta and g shapes differ");
  return (g.array() * beta.cwiseSqrt().template cast<std::complex<Real>>().array()).matrix();
}

/// Per-frequency channel coefficients between candidate AP antenna locations and UE locations.
/// Each frequency index is one flat-fading realization.
struct MeasuredDataset {
  int num_ap_locations = 0;
  int num_ue_locations = 0;
  int num_frequencies = 0;
  bool has_coordinates = false;
  std::vector<Vector3d> ap_coords;
  std::vector<Vector3d> ue_coords;
  /// Row-major over (m, k, i).
  std::vector<std::complex<double>> coefficients;

  std::size_t offset(int m, int k, int i) const {
    return (static_cast<std::size_t>(m) * num_ue_locations + k) * num_frequencies + i;
  }
  std::complex<double> at(int m, int k, int i) const { return coefficients[offset(m, k, i)]; }

  void validate() const;

  /// Channel matrix of frequency index i restricted to the given AP/UE rows.
  CMatrixXd realization(int i, const std::vector<int>& ap_rows, const std::vector<int>& ue_cols) const;
};

/// Reads either the binary container (magic "CFMD") or the m,k,i,re,im CSV variant.
MeasuredDataset load_measured(const std::filesystem::path& path);
void save_measured(const MeasuredDataset& dataset, const std::filesystem::path& path);
void save_measured_csv(const MeasuredDataset& dataset, const std::filesystem::path& path);

/// beta(m,k) = mean over frequency of |h_{m,k}(i)|^2.
MatrixXd beta_from_measured(const MeasuredDataset& dataset);
MatrixXd beta_from_measured(const MeasuredDataset& dataset, const std::vector<int>& ap_rows,
                            const std::vector<int>& ue_cols);

/// Synthetic dataset with the given model: one coefficient vector per (antenna, UE) of
/// length `frequencies`. With `fading` off every coefficient is the real sqrt(beta).
MeasuredDataset synthesize_dataset(const Topology& topology, const PathLossModel& model, int frequencies,
                                   bool fading, Rng& rng, double indoor_penalty_db = kDefaultIndoorPenaltyDb);

struct PathLossFit {
  PathLossModel model;
  std::size_t links = 0;
};

/// Least-squares fit of path loss (dB) against log10(d / reference). A non-positive
/// `reference_distance` selects the minimum link distance.
PathLossFit fit_path_loss(const std::vector<double>& distances, const std::vector<double>& loss_db,
                          double reference_distance = 0.0);
PathLossFit fit_path_loss(const MeasuredDataset& dataset, double reference_distance = 0.0);

}  // namespace cfmimo
