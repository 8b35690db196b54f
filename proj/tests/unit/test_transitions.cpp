#include <doctest.h>

#include <cmath>
#include <random>

#include "reach/error.hpp"
#include "reach/transitions.hpp"
#include "test_support.hpp"

using namespace reach;
using reach::testing::trajectory_from_tiles;

TEST_CASE("row-major index") {
  const TileCoord s{24, 10, 10};
  CHECK(row_major_index(s, s, 1) == 4);
  CHECK(row_major_index(s, TileCoord{24, 11, 10}, 1) == 5);
  CHECK(row_major_index(s, TileCoord{24, 9, 9}, 1) == 0);
  CHECK(row_major_index(s, TileCoord{24, 11, 11}, 1) == 8);
  CHECK_THROWS_AS(row_major_index(s, TileCoord{24, 12, 10}, 1), OutOfNeighborhood);
  CHECK_THROWS_AS(row_major_index(s, TileCoord{23, 10, 10}, 1), ParameterError);
}

TEST_CASE("inverse index") {
  CHECK(inverse_index(4, 1) == TileOffset{0, 0});
  CHECK(inverse_index(5, 1) == TileOffset{1, 0});
  CHECK(inverse_index(0, 1) == TileOffset{-1, -1});
  CHECK_THROWS_AS(inverse_index(9, 1), DomainError);
}

TEST_CASE("index round trip and mirror over every offset") {
  const TileCoord s{24, 1000, 1000};
  for (std::uint32_t d : {1u, 2u, 5u, 12u}) {
    CHECK(center_index(d) == row_major_index(s, s, d));
    for (std::int64_t dy = -static_cast<std::int64_t>(d); dy <= d; ++dy) {
      for (std::int64_t dx = -static_cast<std::int64_t>(d); dx <= d; ++dx) {
        const TileCoord s2{24, static_cast<std::uint32_t>(1000 + dx), static_cast<std::uint32_t>(1000 + dy)};
        const auto idx = row_major_index(s, s2, d);
        CHECK(inverse_index(idx, d) == TileOffset{dx, dy});
        CHECK(mirror_index(idx, d) == row_major_index(s2, s, d));
      }
    }
  }
}

TEST_CASE("gaussian weight") {
  CHECK(gaussian_weight(0, 0, 100, 60) == doctest::Approx(2.65258238486e-5).epsilon(1e-10));
  CHECK(gaussian_peak(100, 60) == gaussian_weight(0, 0, 100, 60));
  CHECK(gaussian_weight(100, 0, 100, 60) == doctest::Approx(gaussian_peak(100, 60) * std::exp(-0.5)).epsilon(1e-14));
  CHECK(gaussian_weight(-100, 0, 100, 60) == gaussian_weight(100, 0, 100, 60));
  CHECK(gaussian_weight(0, 60, 100, 60) == doctest::Approx(gaussian_peak(100, 60) * std::exp(-0.5)).epsilon(1e-14));
}

TEST_CASE("params validation") {
  SummaryParams p;
  CHECK_NOTHROW(p.validate());
  p.delta_r = 0;
  CHECK_THROWS_AS(p.validate(), ParameterError);
  p.delta_r = 2;
  p.weighting = Weighting::gaussian;
  p.sigma_d = 0;
  CHECK_THROWS_AS(p.validate(), ParameterError);
  p.sigma_d = 10;
  p.sigma_t = std::nan("");
  CHECK_THROWS_AS(p.validate(), ParameterError);
}

TEST_CASE("single record emits the self pair only") {
  SummaryParams p;
  p.delta_r = 1;
  const TileCoord s{24, 10, 10};
  const auto c = generate_contributions(trajectory_from_tiles("a", {s}), p);
  REQUIRE(c.size() == 2);
  CHECK(c[0] == Contribution{s, 4, Channel::absorption, 1.0});
  CHECK(c[1] == Contribution{s, 4, Channel::emission, 1.0});
}

TEST_CASE("three records within reach give six pairs") {
  SummaryParams p;
  p.delta_r = 2;
  const auto tr = trajectory_from_tiles("a", {{24, 10, 10}, {24, 11, 10}, {24, 12, 11}});
  CHECK(generate_contributions(tr, p).size() == 12);
}

TEST_CASE("pairs outside the neighborhood are filtered") {
  SummaryParams p;
  p.delta_r = 1;
  const TileCoord a{24, 10, 10}, b{24, 13, 10};
  const auto c = generate_contributions(trajectory_from_tiles("a", {a, b}), p);
  REQUIRE(c.size() == 4);
  CHECK(c[0].node == a);
  CHECK(c[2].node == b);
  for (const auto& x : c) CHECK(x.rm_idx == 4);
}

TEST_CASE("contributions come in matched absorption/emission pairs") {
  std::mt19937_64 rng(3);
  SummaryParams p;
  p.delta_r = 2;
  p.weighting = Weighting::gaussian;
  for (int it = 0; it < 20; ++it) {
    const auto set = reach::testing::random_small_set(rng, 3, 15, 6);
    for (const auto& tr : set.trajectories) {
      const auto c = generate_contributions(tr, p);
      REQUIRE(c.size() % 2 == 0);
      for (std::size_t i = 0; i < c.size(); i += 2) {
        CHECK(c[i].flag == Channel::absorption);
        CHECK(c[i + 1].flag == Channel::emission);
        CHECK(c[i].count == c[i + 1].count);
        CHECK(c[i + 1].rm_idx == mirror_index(c[i].rm_idx, p.delta_r));
        const auto off = inverse_index(c[i].rm_idx, p.delta_r);
        CHECK(c[i + 1].node.x == c[i].node.x + off.dx);
        CHECK(c[i + 1].node.y == c[i].node.y + off.dy);
      }
    }
  }
}

TEST_CASE("gaussian weights use cumulative centroid distance and elapsed time") {
  SummaryParams p;
  p.delta_r = 3;
  p.weighting = Weighting::gaussian;
  p.sigma_d = 5;
  p.sigma_t = 20;
  const TileCoord a{24, 10, 10}, b{24, 11, 10}, c{24, 11, 11};
  const auto tr = trajectory_from_tiles("a", {a, b, c}, 0, 7);
  const auto out = generate_contributions(tr, p);
  // order: (0,0) (0,1) (0,2) (1,1) (1,2) (2,2)
  const double ab = haversine_m(tile_centroid(a), tile_centroid(b));
  const double bc = haversine_m(tile_centroid(b), tile_centroid(c));
  CHECK(out[2].count == doctest::Approx(gaussian_weight(ab, 7, 5, 20)).epsilon(1e-12));
  CHECK(out[4].count == doctest::Approx(gaussian_weight(ab + bc, 14, 5, 20)).epsilon(1e-12));
  CHECK(out[0].count == doctest::Approx(gaussian_peak(5, 20)).epsilon(1e-15));
}
