#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "reach/error.hpp"
#include "reach/trajectory.hpp"
#include "test_support.hpp"

using namespace reach;

namespace {

ParsedSet parse(const std::string& text, CsvFormat f = CsvFormat::generic) {
  std::istringstream in(text);
  ParseOptions o;
  o.format = f;
  return parse_csv(in, o);
}

}  // namespace

TEST_CASE("generic records are sorted per mover") {
  const auto p = parse("a,30,39.9,116.4\na,10,39.9,116.4\na,20,39.9001,116.4\n");
  REQUIRE(p.set.trajectories.size() == 1);
  const auto& r = p.set.trajectories[0].records;
  REQUIRE(r.size() == 3);
  CHECK(r[0].t == 10);
  CHECK(r[1].t == 20);
  CHECK(r[2].t == 30);
  CHECK(p.set.t0 == 10);
  CHECK(p.set.dt == 20);
}

TEST_CASE("movers keep first-appearance order") {
  const auto p = parse("mover_id,t,lat,lon\nb,1,1,1\na,2,1,1\nb,3,1,1\n");
  CHECK(p.stats.header_lines == 1);
  REQUIRE(p.set.trajectories.size() == 2);
  CHECK(p.set.trajectories[0].id == "b");
  CHECK(p.set.trajectories[0].size() == 2);
  CHECK(p.set.trajectories[1].id == "a");
}

TEST_CASE("tdrive line layout") {
  const auto p = parse("1368,2008-02-02 13:30:44,116.45,39.91\n", CsvFormat::tdrive);
  REQUIRE(p.set.trajectories.size() == 1);
  const auto& tr = p.set.trajectories[0];
  CHECK(tr.id == "1368");
  CHECK(tr.records[0].pos.lon == 116.45);
  CHECK(tr.records[0].pos.lat == 39.91);
  // 13:30:44 at UTC+8 is 05:30:44 UTC
  CHECK(tr.records[0].t == 1201930244);
  CHECK(tr.records[0].tile == latlon_to_tile(LatLon::make(39.91, 116.45), 24));
}

TEST_CASE("equal timestamps keep the first record") {
  const auto p = parse("a,10,39.9,116.4\na,10,40.0,116.5\na,11,39.9,116.4\n");
  CHECK(p.stats.duplicate_drops == 1);
  REQUIRE(p.set.trajectories[0].size() == 2);
  CHECK(p.set.trajectories[0].records[0].pos.lat == 39.9);
}

TEST_CASE("malformed lines are skipped until they dominate") {
  const auto ok = parse("a,10,39.9,116.4\nbroken\na,11,39.9,116.4\na,12,999,1\n");
  CHECK(ok.stats.malformed == 2);
  CHECK(ok.set.record_count() == 2);
  CHECK_THROWS_AS(parse("x\ny\na,1,1,1\n"), FormatError);
  try {
    parse("a,1,1,1\nnope\nnope\n");
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("lines 2 3") != std::string::npos);
  }
}

TEST_CASE("time window filter") {
  std::istringstream in("a,5,1,1\na,10,1,1\na,20,1,1\na,21,1,1\n");
  ParseOptions o;
  o.has_window = true;
  o.t0 = 10;
  o.dt = 10;
  const auto p = parse_csv(in, o);
  CHECK(p.stats.out_of_window == 2);
  CHECK(p.set.record_count() == 2);
  for (const auto& r : p.set.trajectories[0].records) {
    CHECK(r.t >= p.set.t0);
    CHECK(r.t <= p.set.t0 + p.set.dt);
  }
}

TEST_CASE("missing file is an io error") {
  CHECK_THROWS_AS(parse_csv_file("/nonexistent/reach.csv", {}), IoError);
}

TEST_CASE("generic csv round trips exactly") {
  SynthSpec spec;
  spec.count = 20;
  spec.grid = default_synth_grid();
  const auto set = synth_trajectories(spec);
  std::ostringstream out;
  write_generic_csv(set, out);
  std::istringstream in(out.str());
  const auto back = parse_csv(in, {});
  REQUIRE(back.set.trajectories.size() == set.trajectories.size());
  for (std::size_t i = 0; i < set.trajectories.size(); ++i) {
    CHECK(back.set.trajectories[i].id == set.trajectories[i].id);
    CHECK(back.set.trajectories[i].records == set.trajectories[i].records);
  }
}

TEST_CASE("parsed trajectories are strictly increasing in time") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> t(0, 50), who(0, 4);
  for (int it = 0; it < 50; ++it) {
    std::string text;
    for (int i = 0; i < 60; ++i) {
      text += "m" + std::to_string(who(rng)) + "," + std::to_string(t(rng)) + ",39.9,116.4\n";
    }
    for (const auto& tr : parse(text).set.trajectories) {
      for (std::size_t k = 1; k < tr.size(); ++k) CHECK(tr.records[k - 1].t < tr.records[k].t);
    }
  }
}

TEST_CASE("local datetime parsing") {
  std::int64_t e = 0;
  CHECK(parse_local_datetime("2008-02-02 00:00:00", kTdriveUtcOffset, e));
  CHECK(e == 1201881600);
  CHECK(parse_local_datetime("2000-02-29 12:00:00", 0, e));
  CHECK(e == 951825600);
  CHECK_FALSE(parse_local_datetime("2008-02-30 00:00:00", 0, e));
  CHECK_FALSE(parse_local_datetime("2008-02-02 24:00:00", 0, e));
  CHECK_FALSE(parse_local_datetime("2008-02-02", 0, e));
  CHECK(local_day_stamp(1201881600, kTdriveUtcOffset) == "20080202");
  CHECK(local_day_stamp(1201881599, kTdriveUtcOffset) == "20080201");
}

TEST_CASE("tdrive day split") {
  const auto p = parse(
      "7,2008-02-02 23:59:59,116.4,39.9\n"
      "7,2008-02-03 00:00:01,116.4,39.9\n"
      "7,2008-02-05 10:00:00,116.4,39.9\n",
      CsvFormat::tdrive);
  const auto split = preprocess_tdrive(p.set);
  REQUIRE(split.trajectories.size() == 3);
  CHECK(split.trajectories[0].id == "7_20080202");
  CHECK(split.trajectories[1].id == "7_20080203");
  CHECK(split.trajectories[2].id == "7_20080205");  // 3rd and 4th have no data
  CHECK(split.record_count() == 3);
}

TEST_CASE("modality filter") {
  const auto set = reach::testing::set_of({reach::testing::trajectory_from_tiles(
      "a", {{24, 13813500, 6357300}, {24, 13813501, 6357300}, {24, 13813600, 6357300}, {24, 13813601, 6357300}}, 0, 1)});
  CHECK(modality_filter(set, keep_all()) == set);
  const auto none = modality_filter(set, [](const Trajectory&, std::size_t, const TrajectoryRecord*) { return false; });
  CHECK(none.trajectories.empty());
  // 99 tiles (about 180 m) in one second is above 50 m/s
  const auto slow = modality_filter(set, max_speed_predicate(50));
  REQUIRE(slow.trajectories.size() == 1);
  CHECK(slow.trajectories[0].size() == 2);
}

TEST_CASE("synthetic generator") {
  SynthSpec spec;
  spec.seed = 7;
  spec.count = 30;
  spec.grid = default_synth_grid();
  CHECK(synth_trajectories(spec) == synth_trajectories(spec));
  CHECK(digest(synth_trajectories(spec)) == digest(synth_trajectories(spec)));
  auto other = spec;
  other.seed = 8;
  CHECK(digest(synth_trajectories(other)) != digest(synth_trajectories(spec)));

  spec.n_min = spec.n_max = 1;
  for (const auto& tr : synth_trajectories(spec).trajectories) CHECK(tr.size() == 1);

  auto road = bench_preset(40, 3);
  const auto set = synth_trajectories(road);
  for (const auto& tr : set.trajectories) {
    CHECK(tr.size() >= 20);
    CHECK(tr.size() <= 80);
    for (std::size_t k = 0; k < tr.size(); ++k) {
      CHECK(on_lattice(road, tr.records[k].tile));
      if (k) CHECK(tr.records[k - 1].t < tr.records[k].t);
    }
  }

  spec.grid.w = 0;
  CHECK_THROWS_AS(synth_trajectories(spec), ParameterError);
}

TEST_CASE("cumulative distances") {
  const auto tr = reach::testing::trajectory_from_tiles("a", {{24, 10, 10}, {24, 10, 10}, {24, 11, 10}});
  const auto d = cumulative_distances(tr.records);
  REQUIRE(d.size() == 3);
  CHECK(d[0] == 0.0);
  CHECK(d[1] == 0.0);
  CHECK(d[2] > 0.0);
}
