// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/scenario.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

namespace cfmimo {

namespace {

constexpr int kMaxPlacementAttempts = 10000;

// Coordinates are O(100 m), so distances computed from them carry ~1e-13 m
// of rounding; the nominal spacing is padded so measured separations never
// fall below the requested minimum.
constexpr double kSpacingPad = 1e-11;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double pick_height(const AreaSpec& area, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, area.ap_heights.size() - 1);
  return area.ap_heights[pick(rng)];
}

// Lays N antennas on a line through `anchor`; returns false if any leaves the area.
bool lay_array(const AreaSpec& area, const Vector3d& anchor, int N, double spacing, double azimuth,
               std::vector<Vector3d>& out) {
  out.clear();
  const Vector3d dir(std::cos(azimuth), std::sin(azimuth), 0.0);
  const double centre = 0.5 * (N - 1);
  for (int j = 0; j < N; ++j) {
    Vector3d p = anchor + (j - centre) * spacing * dir;
    if (!area.contains(p, 0.0)) return false;
    out.push_back(p);
  }
  return true;
}

}  // namespace

void AreaSpec::validate() const {
  if (!(width > 0.0) || !(depth > 0.0)) throw std::invalid_argument("area width and depth must be positive");
  if (ap_heights.empty()) throw std::invalid_argument("area needs at least one AP height");
  for (double h : ap_heights)
    if (!(h > 0.0)) throw std::invalid_argument("AP heights must be positive");
  if (!(ue_height > 0.0)) throw std::invalid_argument("UE height must be positive");
}

bool AreaSpec::contains(const Vector3d& p, double slack) const {
  return p.x() >= -slack && p.x() <= width + slack && p.y() >= -slack && p.y() <= depth + slack;
}

std::string to_string(ApPlacement mode) { return mode == ApPlacement::Grid ? "grid" : "random"; }
std::string to_string(UePlacement mode) { return mode == UePlacement::Clustered ? "clustered" : "spread"; }
std::string to_string(Environment env) { return env == Environment::Indoor ? "indoor" : "outdoor"; }

ApPlacement ap_placement_from_string(const std::string& name) {
  if (name == "random") return ApPlacement::Random;
  if (name == "grid") return ApPlacement::Grid;
  throw std::invalid_argument("unknown AP placement '" + name + "' (expected random|grid)");
}

UePlacement ue_placement_from_string(const std::string& name) {
  if (name == "spread") return UePlacement::Spread;
  if (name == "clustered") return UePlacement::Clustered;
  throw std::invalid_argument("unknown UE placement '" + name + "' (expected spread|clustered)");
}

GridShape grid_shape(int L) {
  if (L < 1) throw std::invalid_argument("grid needs L >= 1");
  GridShape best{L, 1};
  for (int rows = 1; rows * rows <= L; ++rows)
    if (L % rows == 0) best = {L / rows, rows};
  return best;
}

Topology place_aps(const AreaSpec& area, int L, int N, ApPlacement mode, double min_spacing, Rng& rng) {
  area.validate();
  if (L < 1 || N < 1) throw std::invalid_argument("place_aps needs L >= 1 and N >= 1");
  if (N > 1 && !(min_spacing > 0.0)) throw std::invalid_argument("antenna spacing must be positive");

  const double spacing = min_spacing * (1.0 + kSpacingPad);
  const double array_length = (N - 1) * spacing;
  if (array_length > std::hypot(area.width, area.depth))
    throw InfeasibleGeometry("array of " + std::to_string(N) + " antennas at " + std::to_string(min_spacing) +
                             " m does not fit in the area");

  Topology topo;
  topo.L = L;
  topo.N = N;
  topo.ap_antennas.reserve(static_cast<std::size_t>(L) * N);

  const GridShape shape = grid_shape(L);
  const double cell_w = area.width / shape.columns;
  const double cell_d = area.depth / shape.rows;

  std::vector<Vector3d> positions;
  for (int l = 0; l < L; ++l) {
    double x_lo = 0.0, x_hi = area.width, y_lo = 0.0, y_hi = area.depth;
    if (mode == ApPlacement::Grid) {
      const int col = l % shape.columns;
      const int row = l / shape.columns;
      x_lo = col * cell_w;
      x_hi = (col + 1) * cell_w;
      y_lo = row * cell_d;
      y_hi = (row + 1) * cell_d;
    }
    bool placed = false;
    for (int attempt = 0; attempt < kMaxPlacementAttempts && !placed; ++attempt) {
      const Vector3d anchor(uniform(rng, x_lo, x_hi), uniform(rng, y_lo, y_hi), pick_height(area, rng));
      const double azimuth = N > 1 ? uniform(rng, 0.0, std::numbers::pi) : 0.0;
      placed = lay_array(area, anchor, N, spacing, azimuth, positions);
    }
    if (!placed) throw InfeasibleGeometry("could not place AP " + std::to_string(l) + " inside the area");
    for (const auto& p : positions) topo.ap_antennas.push_back({p, l});
  }
  return topo;
}

std::vector<UserEquipment> place_ues(const AreaSpec& area, int K, UePlacement mode, double cluster_radius,
                                     double indoor_fraction, Rng& rng) {
  area.validate();
  if (K < 1) throw std::invalid_argument("place_ues needs K >= 1");
  if (mode == UePlacement::Clustered && !(cluster_radius > 0.0))
    throw std::invalid_argument("cluster radius must be positive");
  if (!(indoor_fraction >= 0.0 && indoor_fraction <= 1.0))
    throw std::invalid_argument("indoor fraction must lie in [0, 1]");

  std::bernoulli_distribution indoor(indoor_fraction);
  std::vector<UserEquipment> ues;
  ues.reserve(K);

  Vector3d centre(uniform(rng, 0.0, area.width), uniform(rng, 0.0, area.depth), area.ue_height);
  for (int k = 0; k < K; ++k) {
    Vector3d p;
    if (mode == UePlacement::Spread) {
      p = {uniform(rng, 0.0, area.width), uniform(rng, 0.0, area.depth), area.ue_height};
    } else {
      // Uniform in the disc, rejecting points outside the area.
      do {
        const double r = cluster_radius * std::sqrt(uniform(rng, 0.0, 1.0));
        const double phi = uniform(rng, 0.0, 2.0 * std::numbers::pi);
        p = centre + Vector3d(r * std::cos(phi), r * std::sin(phi), 0.0);
      } while (!area.contains(p, 0.0));
    }
    ues.push_back({p, indoor(rng) ? Environment::Indoor : Environment::Outdoor});
  }
  return ues;
}

double link_distance(const Vector3d& ap_antenna, const Vector3d& ue) { return (ap_antenna - ue).norm(); }

void write_topology(std::ostream& out, const Topology& topology) {
  out << "kind,id,x,y,z,tag\n";
  out.precision(17);
  for (std::size_t m = 0; m < topology.ap_antennas.size(); ++m) {
    const auto& a = topology.ap_antennas[m];
    out << "ap," << m << ',' << a.position.x() << ',' << a.position.y() << ',' << a.position.z() << ','
        << a.ap_index << '\n';
  }
  for (std::size_t k = 0; k < topology.ues.size(); ++k) {
    const auto& u = topology.ues[k];
    out << "ue," << k << ',' << u.position.x() << ',' << u.position.y() << ',' << u.position.z() << ','
        << to_string(u.environment) << '\n';
  }
}

}  // namespace cfmimo
