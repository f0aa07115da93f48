// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/channel.hpp"

#include <algorithm>
#include <cmath>

namespace cfmimo {

void PathLossModel::validate() const {
  if (!(slope > 0.0)) throw std::invalid_argument("path-loss slope must be positive");
  if (!(reference_distance > 0.0)) throw std::invalid_argument("path-loss reference distance must be positive");
  if (!(shadow_sigma >= 0.0)) throw std::invalid_argument("shadowing sigma must be nonnegative");
  if (!std::isfinite(intercept)) throw std::invalid_argument("path-loss intercept must be finite");
}

PathLossModel PathLossModel::preset(const std::string& name) {
  if (name == "literature") return literature();
  if (name == "adjusted") return adjusted();
  throw std::invalid_argument("unknown path-loss preset '" + name + "' (expected literature|adjusted)");
}

double path_loss_db(const PathLossModel& model, double distance) {
  if (!(distance > 0.0)) throw NonPositiveDistance("path loss needs a positive distance");
  const double d = std::max(distance, model.reference_distance);
  return model.intercept + model.slope * std::log10(d / model.reference_distance);
}

namespace {

std::vector<Vector3d> ap_centroids(const Topology& topology) {
  std::vector<Vector3d> centre(topology.L, Vector3d::Zero());
  std::vector<int> count(topology.L, 0);
  for (const auto& a : topology.ap_antennas) {
    centre[a.ap_index] += a.position;
    ++count[a.ap_index];
  }
  for (int l = 0; l < topology.L; ++l)
    if (count[l] > 0) centre[l] /= count[l];
  return centre;
}

}  // namespace

MatrixXd draw_large_scale(const Topology& topology, const PathLossModel& model, Rng& rng,
                          double indoor_penalty_db) {
  model.validate();
  const int L = topology.L;
  const int K = topology.K();
  if (L < 1 || K < 1 || topology.M() < 1) throw std::invalid_argument("draw_large_scale needs a populated topology");

  const auto centre = ap_centroids(topology);
  std::normal_distribution<double> shadow(0.0, 1.0);
  MatrixXd beta_ap(L, K);
  for (int l = 0; l < L; ++l)
    for (int k = 0; k < K; ++k) {
      const auto& ue = topology.ues[k];
      double gain_db = -path_loss_db(model, link_distance(centre[l], ue.position)) - model.shadow_sigma * shadow(rng);
      if (ue.environment == Environment::Indoor) gain_db -= indoor_penalty_db;
      beta_ap(l, k) = std::pow(10.0, gain_db / 10.0);
    }

  MatrixXd beta(topology.M(), K);
  for (int m = 0; m < topology.M(); ++m) beta.row(m) = beta_ap.row(topology.ap_antennas[m].ap_index);
  return beta;
}

void MeasuredDataset::validate() const {
  if (num_ap_locations < 1 || num_ue_locations < 1 || num_frequencies < 1)
    throw MalformedDataset("dataset dimensions must be positive");
  const std::size_t expected =
      static_cast<std::size_t>(num_ap_locations) * num_ue_locations * static_cast<std::size_t>(num_frequencies);
  if (coefficients.size() != expected)
    throw MalformedDataset("dataset holds " + std::to_string(coefficients.size()) + " coefficients, expected " +
                           std::to_string(expected));
  for (const auto& c : coefficients)
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) throw MalformedDataset("dataset has non-finite values");
  if (has_coordinates) {
    if (static_cast<int>(ap_coords.size()) != num_ap_locations || static_cast<int>(ue_coords.size()) != num_ue_locations)
      throw MalformedDataset("coordinate table size does not match the dataset dimensions");
    for (const auto& p : ap_coords)
      if (!p.allFinite()) throw MalformedDataset("non-finite AP coordinate");
    for (const auto& p : ue_coords)
      if (!p.allFinite()) throw MalformedDataset("non-finite UE coordinate");
  }
}

CMatrixXd MeasuredDataset::realization(int i, const std::vector<int>& ap_rows, const std::vector<int>& ue_cols) const {
  if (i < 0 || i >= num_frequencies) throw std::out_of_range("frequency index out of range");
  CMatrixXd H(static_cast<Eigen::Index>(ap_rows.size()), static_cast<Eigen::Index>(ue_cols.size()));
  for (std::size_t r = 0; r < ap_rows.size(); ++r)
    for (std::size_t c = 0; c < ue_cols.size(); ++c) H(r, c) = at(ap_rows[r], ue_cols[c], i);
  return H;
}

MatrixXd beta_from_measured(const MeasuredDataset& dataset, const std::vector<int>& ap_rows,
                            const std::vector<int>& ue_cols) {
  MatrixXd beta(static_cast<Eigen::Index>(ap_rows.size()), static_cast<Eigen::Index>(ue_cols.size()));
  for (std::size_t r = 0; r < ap_rows.size(); ++r)
    for (std::size_t c = 0; c < ue_cols.size(); ++c) {
      double acc = 0.0;
      for (int i = 0; i < dataset.num_frequencies; ++i) acc += std::norm(dataset.at(ap_rows[r], ue_cols[c], i));
      beta(r, c) = acc / dataset.num_frequencies;
    }
  return beta;
}

MatrixXd beta_from_measured(const MeasuredDataset& dataset) {
  std::vector<int> rows(dataset.num_ap_locations), cols(dataset.num_ue_locations);
  for (int m = 0; m < dataset.num_ap_locations; ++m) rows[m] = m;
  for (int k = 0; k < dataset.num_ue_locations; ++k) cols[k] = k;
  return beta_from_measured(dataset, rows, cols);
}

MeasuredDataset synthesize_dataset(const Topology& topology, const PathLossModel& model, int frequencies,
                                   bool fading, Rng& rng, double indoor_penalty_db) {
  if (frequencies < 1) throw std::invalid_argument("synthesize_dataset needs at least one frequency");
  const MatrixXd beta = draw_large_scale(topology, model, rng, indoor_penalty_db);
  MeasuredDataset ds;
  ds.num_ap_locations = topology.M();
  ds.num_ue_locations = topology.K();
  ds.num_frequencies = frequencies;
  ds.has_coordinates = true;
  for (const auto& a : topology.ap_antennas) ds.ap_coords.push_back(a.position);
  for (const auto& u : topology.ues) ds.ue_coords.push_back(u.position);
  ds.coefficients.resize(ds.offset(ds.num_ap_locations, 0, 0));
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  for (int m = 0; m < ds.num_ap_locations; ++m)
    for (int k = 0; k < ds.num_ue_locations; ++k) {
      const double amp = std::sqrt(beta(m, k));
      for (int i = 0; i < frequencies; ++i) {
        std::complex<double> g{1.0, 0.0};
        if (fading) {
          const double re = normal(rng);
          const double im = normal(rng);
          g = {re, im};
        }
        ds.coefficients[ds.offset(m, k, i)] = amp * g;
      }
    }
  return ds;
}

PathLossFit fit_path_loss(const std::vector<double>& distances, const std::vector<double>& loss_db,
                          double reference_distance) {
  if (distances.size() != loss_db.size()) throw std::invalid_argument("fit_path_loss: size mismatch");
  if (distances.size() < 2) throw MalformedDataset("path-loss fit needs at least two links");
  for (std::size_t j = 0; j < distances.size(); ++j)
    if (!(distances[j] > 0.0) || !std::isfinite(distances[j]) || !std::isfinite(loss_db[j]))
      throw MalformedDataset("path-loss fit needs positive finite distances and finite losses");

  double ref = reference_distance;
  if (!(ref > 0.0)) ref = *std::min_element(distances.begin(), distances.end());

  const auto n = static_cast<Eigen::Index>(distances.size());
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    A(j, 0) = 1.0;
    A(j, 1) = std::log10(distances[j] / ref);
    y(j) = loss_db[j];
  }
  if ((A.col(1).array() - A(0, 1)).abs().maxCoeff() == 0.0)
    throw MalformedDataset("path-loss fit needs at least two distinct distances");

  const Eigen::Vector2d coef = A.colPivHouseholderQr().solve(y);
  const double rss = (A * coef - y).squaredNorm();
  PathLossFit fit;
  fit.links = distances.size();
  fit.model.intercept = coef(0);
  fit.model.slope = coef(1);
  fit.model.reference_distance = ref;
  fit.model.shadow_sigma = n > 2 ? std::sqrt(rss / static_cast<double>(n - 2)) : 0.0;
  return fit;
}

PathLossFit fit_path_loss(const MeasuredDataset& dataset, double reference_distance) {
  dataset.validate();
  if (!dataset.has_coordinates) throw MalformedDataset("path-loss fit needs a dataset with coordinates");
  const MatrixXd beta = beta_from_measured(dataset);
  std::vector<double> d, loss;
  for (int m = 0; m < dataset.num_ap_locations; ++m)
    for (int k = 0; k < dataset.num_ue_locations; ++k) {
      if (!(beta(m, k) > 0.0)) continue;
      d.push_back(link_distance(dataset.ap_coords[m], dataset.ue_coords[k]));
      loss.push_back(-10.0 * std::log10(beta(m, k)));
    }
  return fit_path_loss(d, loss, reference_distance);
}

}  // namespace cfmimo
