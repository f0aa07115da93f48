// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cfmimo/random.hpp"
#include "cfmimo/types.hpp"

namespace cfmimo {

/// Rectangular service area [0, width] x [0, depth] with the admissible AP heights.
struct AreaSpec {
  double width = 200.0;
  double depth = 200.0;
  std::vector<double> ap_heights{25.0, 35.0, 45.0};
  double ue_height = 1.5;

  void validate() const;
  bool contains(const Vector3d& p, double slack = 1e-9) const;
};

enum class ApPlacement { Random, Grid };
enum class UePlacement { Spread, Clustered };
enum class Environment { Outdoor, Indoor };

std::string to_string(ApPlacement mode);
std::string to_string(UePlacement mode);
std::string to_string(Environment env);
ApPlacement ap_placement_from_string(const std::string& name);
UePlacement ue_placement_from_string(const std::string& name);

struct ApAntenna {
  Vector3d position;
  int ap_index = 0;
};

struct UserEquipment {
  Vector3d position;
  Environment environment = Environment::Outdoor;
};

struct Topology {
  std::vector<ApAntenna> ap_antennas;
  std::vector<UserEquipment> ues;
  int L = 0;
  int N = 0;

  int M() const { return static_cast<int>(ap_antennas.size()); }
  int K() const { return static_cast<int>(ues.size()); }
};

inline constexpr double kDefaultAntennaSpacing = 0.43;
inline constexpr double kDefaultClusterRadius = 15.0;

/// Grid shape for `L` cells: columns along the width, rows along the depth,
/// columns >= rows with the squarest factorization.
struct GridShape {
  int columns = 1;
  int rows = 1;
};
GridShape grid_shape(int L);

/// Places L APs with N antennas each. Each AP's antennas form a horizontal
/// uniform linear array through the anchor with random azimuth.
Topology place_aps(const AreaSpec& area, int L, int N, ApPlacement mode, double min_spacing, Rng& rng);

/// Places K single-antenna UEs at `area.ue_height`.
std::vector<UserEquipment> place_ues(const AreaSpec& area, int K, UePlacement mode, double cluster_radius,
                                     double indoor_fraction, Rng& rng);

double link_distance(const Vector3d& ap_antenna, const Vector3d& ue);

/// One row per antenna then per UE: kind,id,x,y,z,tag.
void write_topology(std::ostream& out, const Topology& topology);

}  // namespace cfmimo
