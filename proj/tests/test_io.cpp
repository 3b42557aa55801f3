#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "rrrsim/config.hpp"
#include "rrrsim/csv.hpp"
#include "rrrsim/log_io.hpp"
#include "rrrsim/simulation.hpp"
#include "rrrsim/svg.hpp"

using namespace rrrsim;
namespace fs = std::filesystem;

namespace {
fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "rrrsim_io_tests";
  fs::create_directories(dir);
  return dir / name;
}
}  // namespace

TEST_CASE("doubles survive the CSV round trip bit-exactly") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> values = {0.0, -0.0, 1.0, -1.5, 1e-300, -1e300,
                                3.141592653589793, 1e-17};
  for (int k = 0; k < 200; ++k) values.push_back(std::ldexp(u(rng), k % 60));
  for (double v : values) {
    const double back = csv_parse(csv_format(v));
    CHECK(std::memcmp(&back, &v, sizeof v) == 0);
  }
}

TEST_CASE("csv reader flags schema problems") {
  const fs::path p = temp_file("bad.csv");
  {
    std::ofstream out(p);
    out << "a,b\n1,2\n3\n";
  }
  CHECK_THROWS_AS(read_csv(p.string()), SchemaMismatchError);
  {
    std::ofstream out(p);
    out << "a,b\n1,zzz\n";
  }
  CHECK_THROWS_AS(read_csv(p.string()), SchemaMismatchError);
  CHECK_THROWS_AS(read_csv("/nonexistent/file.csv"), SchemaMismatchError);
  {
    std::ofstream out(p);
    out << "a,b\n1,2\n";
  }
  const CsvTable t = read_csv(p.string());
  CHECK(t.column("b") == 1);
  CHECK_THROWS_AS(t.column("c"), SchemaMismatchError);
}

TEST_CASE("run logs round-trip through CSV") {
  Scenario sc;
  sc.duration = 0.2;
  sc.waypoints.push_back({Vec3(0.02, 0.01, 0.05), 0.15});
  const RunLog log = run(sc);
  const fs::path p = temp_file("log.csv");
  write_log_csv(p.string(), log);
  const CsvTable t = read_csv(p.string());
  check_log_schema(t);
  REQUIRE(t.rows.size() == log.rows.size());
  for (size_t k = 0; k < t.rows.size(); ++k) {
    const auto vals = log_row_values(log.rows[k]);
    for (size_t c = 0; c < vals.size(); ++c) CHECK(t.rows[k][c] == vals[c]);
  }
}

TEST_CASE("scenario json parsing covers every section") {
  const nlohmann::json j = {
      {"name", "parse-check"},
      {"duration", 0.5},
      {"seed", 7},
      {"start_pose", {0.01, 0.0, 0.1}},
      {"working_mode", {1, 1, 1}},
      {"geometry", {{"base_radius", 0.36}, {"l1", 0.26}}},
      {"dynamics",
       {{"link_mass", 0.4}, {"gravity", {0.0, -9.81}}, {"viscous", {0.1, 0.1, 0.1}}}},
      {"mismatch", {{"mass", 1.05}}},
      {"control", {{"stiffness", {1500.0, 1500.0, 60.0}}}},
      {"observers",
       {{"enabled", {"mo", "sosml"}},
        {"mo", {{"gain", {25.0, 25.0, 25.0}}}},
        {"sosml", {{"s1", {90.0, 90.0, 90.0}}, {"disturbance_bound", 10.0}}}}},
      {"detection", {{"epsilon", {10.0, 10.0, 0.8}}, {"consecutive", 2}}},
      {"pipeline", {{"enabled", true}, {"quantum_passive_deg", 0.2}}},
      {"trajectory", {{{"target", {0.03, 0.0, 0.0}}, {"duration", 0.3}}}},
      {"contact",
       {{"type", "spring_wall"},
        {"location", {{"chain", 1}, {"link", 2}, {"offset", {0.1, 0.0}}}},
        {"wall_point", {0.0, 0.0}},
        {"wall_normal", {0.0, 1.0}},
        {"stiffness", 4000.0}}},
  };
  const Scenario sc = scenario_from_json(j);
  CHECK(sc.name == "parse-check");
  CHECK(sc.geometry.base_anchor[0].norm() == Catch::Approx(0.36));
  CHECK(sc.geometry.link_len_1[2] == Catch::Approx(0.26));
  CHECK(sc.dynamics.proximal[1].mass == Catch::Approx(0.4));
  CHECK(sc.dynamics.gravity[1] == Catch::Approx(-9.81));
  CHECK(sc.mismatch.mass == Catch::Approx(1.05));
  CHECK(sc.gains.stiffness[0] == Catch::Approx(1500.0));
  CHECK(sc.observers.mo);
  CHECK_FALSE(sc.observers.kf);
  CHECK(sc.observers.sosml);
  CHECK(sc.mo_gain[0] == Catch::Approx(25.0));
  CHECK(sc.sosml.s1[0] == Catch::Approx(90.0));
  CHECK(sc.detection.consecutive == 2);
  CHECK(sc.pipeline.enabled);
  CHECK(sc.pipeline.quantum_passive ==
        Catch::Approx(0.2 * std::numbers::pi / 180.0));
  CHECK(sc.waypoints.size() == 1);
  CHECK(sc.contact.type == ContactType::SpringWall);
  CHECK(sc.contact.stiffness == Catch::Approx(4000.0));
}

TEST_CASE("scenario defaults overlay by file") {
  const fs::path base = temp_file("base.json");
  const fs::path overlay = temp_file("overlay.json");
  {
    std::ofstream out(base);
    out << R"({"duration": 2.0, "control": {"stiffness": [500, 500, 40]},
               "detection": {"epsilon": [9, 9, 0.9]}})";
  }
  {
    std::ofstream out(overlay);
    out << R"({"defaults": "base.json", "duration": 0.7,
               "control": {"stiffness": [800, 800, 40]}})";
  }
  const Scenario sc = load_scenario(overlay.string());
  CHECK(sc.duration == Catch::Approx(0.7));           // overridden
  CHECK(sc.gains.stiffness[0] == Catch::Approx(800)); // overridden
  CHECK(sc.detection.epsilon[0] == Catch::Approx(9)); // inherited
}

TEST_CASE("config errors carry diagnostics") {
  const fs::path p = temp_file("broken.json");
  {
    std::ofstream out(p);
    out << "{ not json";
  }
  CHECK_THROWS_AS(load_scenario(p.string()), ConfigError);
  {
    std::ofstream out(p);
    out << R"({"contact": {"type": "laser"}})";
  }
  CHECK_THROWS_WITH(load_scenario(p.string()),
                    Catch::Matchers::ContainsSubstring("laser"));
  {
    std::ofstream out(p);
    out << R"({"duration": -2})";
  }
  CHECK_THROWS_AS(load_scenario(p.string()), ConfigError);
}

TEST_CASE("svg rendering is deterministic and validated") {
  Series s1{"a", {0.0, 1.0, 2.0}, {0.0, 1.0, 0.5}};
  Series s2{"b", {0.0, 1.0, 2.0}, {1.0, -1.0, 0.0}};
  const std::string svg1 = render_line_chart("demo", "t", {s1, s2});
  const std::string svg2 = render_line_chart("demo", "t", {s1, s2});
  CHECK(svg1 == svg2);
  CHECK(svg1.find("<polyline") != std::string::npos);
  CHECK(svg1.find("</svg>") != std::string::npos);
  CHECK_THROWS_AS(render_line_chart("x", "t", {}), SchemaMismatchError);
  Series empty{"e", {}, {}};
  CHECK_THROWS_AS(render_line_chart("x", "t", {empty}), SchemaMismatchError);
  Series ragged{"r", {0.0, 1.0}, {0.0}};
  CHECK_THROWS_AS(render_line_chart("x", "t", {ragged}), SchemaMismatchError);
}
