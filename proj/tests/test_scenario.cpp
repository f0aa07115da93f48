// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <set>
#include <sstream>

#include "cfmimo/scenario.hpp"

using namespace cfmimo;

namespace {

void check_topology_invariants(const AreaSpec& area, const Topology& topo, double spacing) {
  REQUIRE(topo.M() == topo.L * topo.N);
  std::vector<std::vector<Vector3d>> per_ap(topo.L);
  for (const auto& a : topo.ap_antennas) {
    REQUIRE(a.ap_index >= 0);
    REQUIRE(a.ap_index < topo.L);
    CHECK(area.contains(a.position, 0.0));
    per_ap[a.ap_index].push_back(a.position);
  }
  for (const auto& group : per_ap) {
    REQUIRE(static_cast<int>(group.size()) == topo.N);
    for (std::size_t i = 0; i < group.size(); ++i)
      for (std::size_t j = i + 1; j < group.size(); ++j) CHECK((group[i] - group[j]).norm() >= spacing);
  }
}

}  // namespace

TEST_CASE("grid_shape picks the squarest factorization with columns along the width") {
  CHECK(grid_shape(4).columns == 2);
  CHECK(grid_shape(4).rows == 2);
  CHECK(grid_shape(64).columns == 8);
  CHECK(grid_shape(6).columns == 3);
  CHECK(grid_shape(6).rows == 2);
  CHECK(grid_shape(7).columns == 7);
  CHECK(grid_shape(7).rows == 1);
  CHECK(grid_shape(1).columns == 1);
  CHECK_THROWS_AS(grid_shape(0), std::invalid_argument);
}

TEST_CASE("grid placement puts exactly one AP in every cell") {
  AreaSpec area;
  for (int L : {4, 6, 16, 64}) {
    Rng rng(11 + L);
    const Topology topo = place_aps(area, L, 1, ApPlacement::Grid, kDefaultAntennaSpacing, rng);
    const GridShape shape = grid_shape(L);
    const double cw = area.width / shape.columns, cd = area.depth / shape.rows;
    std::multiset<int> cells;
    for (const auto& a : topo.ap_antennas) {
      const int col = std::min(shape.columns - 1, static_cast<int>(a.position.x() / cw));
      const int row = std::min(shape.rows - 1, static_cast<int>(a.position.y() / cd));
      cells.insert(row * shape.columns + col);
      CHECK(a.ap_index == row * shape.columns + col);
    }
    for (int c = 0; c < L; ++c) CHECK(cells.count(c) == 1);
  }
}

TEST_CASE("2x2 grid on 200x200 has cell boundaries at 0, 100, 200") {
  AreaSpec area;
  Rng rng(3);
  const Topology topo = place_aps(area, 4, 1, ApPlacement::Grid, kDefaultAntennaSpacing, rng);
  for (const auto& a : topo.ap_antennas) {
    const int col = a.ap_index % 2, row = a.ap_index / 2;
    CHECK(a.position.x() >= 100.0 * col);
    CHECK(a.position.x() <= 100.0 * (col + 1));
    CHECK(a.position.y() >= 100.0 * row);
    CHECK(a.position.y() <= 100.0 * (row + 1));
  }
}

TEST_CASE("co-located 64-antenna AP forms a 27.09 m line") {
  AreaSpec area;
  Rng rng(5);
  const Topology topo = place_aps(area, 1, 64, ApPlacement::Random, 0.43, rng);
  REQUIRE(topo.M() == 64);
  for (const auto& a : topo.ap_antennas) CHECK(a.ap_index == 0);
  const double length = (topo.ap_antennas.front().position - topo.ap_antennas.back().position).norm();
  CHECK(length == doctest::Approx(63 * 0.43).epsilon(1e-9));
  for (const auto& a : topo.ap_antennas) CHECK(a.position.z() == topo.ap_antennas[0].position.z());
  check_topology_invariants(area, topo, 0.43);
}

TEST_CASE("placement is reproducible from the seed") {
  AreaSpec area;
  Rng a(42), b(42);
  const Topology t1 = place_aps(area, 64, 1, ApPlacement::Random, kDefaultAntennaSpacing, a);
  const Topology t2 = place_aps(area, 64, 1, ApPlacement::Random, kDefaultAntennaSpacing, b);
  std::ostringstream s1, s2;
  write_topology(s1, t1);
  write_topology(s2, t2);
  CHECK(s1.str() == s2.str());

  Rng c(42), d(42);
  const auto u1 = place_ues(area, 8, UePlacement::Spread, 15.0, 0.0, c);
  const auto u2 = place_ues(area, 8, UePlacement::Spread, 15.0, 0.0, d);
  for (std::size_t k = 0; k < u1.size(); ++k) CHECK(u1[k].position == u2[k].position);
}

TEST_CASE("topology invariants hold over random configurations") {
  AreaSpec area;
  Rng meta(2024);
  std::uniform_int_distribution<int> pickL(1, 20), pickN(1, 16), mode(0, 1);
  for (int trial = 0; trial < 60; ++trial) {
    const int L = pickL(meta), N = pickN(meta);
    const double spacing = 0.43 + 0.1 * (trial % 5);
    Rng rng(trial);
    const Topology topo =
        place_aps(area, L, N, mode(meta) ? ApPlacement::Grid : ApPlacement::Random, spacing, rng);
    CHECK(topo.L == L);
    CHECK(topo.N == N);
    check_topology_invariants(area, topo, spacing);
    for (const auto& a : topo.ap_antennas) {
      bool allowed = false;
      for (double h : area.ap_heights) allowed |= a.position.z() == h;
      CHECK(allowed);
    }
  }
}

TEST_CASE("arrays that cannot fit raise InfeasibleGeometry") {
  AreaSpec tiny;
  tiny.width = 1.0;
  tiny.depth = 1.0;
  Rng rng(1);
  CHECK_THROWS_AS(place_aps(tiny, 1, 10, ApPlacement::Random, 0.43, rng), InfeasibleGeometry);
  CHECK_THROWS_AS(place_aps(tiny, 0, 1, ApPlacement::Random, 0.43, rng), std::invalid_argument);
  AreaSpec bad;
  bad.width = -1.0;
  CHECK_THROWS_AS(place_aps(bad, 1, 1, ApPlacement::Random, 0.43, rng), std::invalid_argument);
}

TEST_CASE("clustered UEs stay within one disc diameter of each other") {
  AreaSpec area;
  for (int seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const auto ues = place_ues(area, 8, UePlacement::Clustered, 15.0, 0.0, rng);
    REQUIRE(ues.size() == 8);
    for (const auto& u : ues) {
      CHECK(area.contains(u.position, 0.0));
      CHECK(u.position.z() == area.ue_height);
    }
    for (std::size_t i = 0; i < ues.size(); ++i)
      for (std::size_t j = i + 1; j < ues.size(); ++j)
        CHECK((ues[i].position - ues[j].position).head<2>().norm() <= 30.0);
  }
  Rng rng(0);
  CHECK_THROWS_AS(place_ues(area, 8, UePlacement::Clustered, 0.0, 0.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(place_ues(area, 0, UePlacement::Spread, 15.0, 0.0, rng), std::invalid_argument);
}

TEST_CASE("indoor tagging follows the requested fraction") {
  AreaSpec area;
  const double p = 4.0 / 128.0;
  const int draws = 20000, K = 8;
  Rng rng(77);
  double total = 0;
  for (int d = 0; d < draws; ++d)
    for (const auto& u : place_ues(area, K, UePlacement::Spread, 15.0, p, rng))
      total += u.environment == Environment::Indoor ? 1.0 : 0.0;
  const double mean = total / draws;
  const double se = std::sqrt(K * p * (1 - p) / draws);
  CHECK(std::abs(mean - K * p) < 4.0 * se);
  CHECK(K * p == doctest::Approx(0.25));
}

TEST_CASE("link_distance is the 3-D Euclidean distance") {
  CHECK(link_distance({0, 0, 25}, {0, 0, 1.5}) == doctest::Approx(23.5));
  CHECK(link_distance({30, 40, 1.5}, {0, 0, 1.5}) == doctest::Approx(50.0));
  CHECK(link_distance({3, 4, 5}, {3, 4, 5}) == 0.0);
}

TEST_CASE("topology text format has one row per antenna and UE") {
  Topology topo;
  topo.L = 1;
  topo.N = 1;
  topo.ap_antennas.push_back({{1.0, 2.0, 25.0}, 0});
  topo.ues.push_back({{3.0, 4.0, 1.5}, Environment::Indoor});
  std::ostringstream out;
  write_topology(out, topo);
  CHECK(out.str() == "kind,id,x,y,z,tag\nap,0,1,2,25,0\nue,0,3,4,1.5,indoor\n");
}
