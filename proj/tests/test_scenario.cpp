#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "stoq/scenario.hpp"

using namespace stoq;

TEST_CASE("every bundled scenario parses and validates") {
  const auto names = list_scenarios();
  CHECK(names.size() >= 8);
  for (const auto& name : names) {
    const Scenario sc = load_scenario(name);
    CHECK(sc.name == name);
    const std::string report = validate_report(sc);
    CHECK(report.rfind("ok:", 0) == 0);
    CHECK(report.find(name) != std::string::npos);
  }
}

TEST_CASE("malformed documents raise a parse error") {
  CHECK_THROWS_AS(parse_scenario_text("{ not json"), ScenarioParseError);
  CHECK_THROWS_AS(load_scenario("/no/such/scenario-file.json"),
                  ScenarioParseError);
}

TEST_CASE("schema violations carry the offending key path") {
  const std::string base = R"({
    "name": "x",
    "kind": "born-rule",
    "particle": {
      "potential": {"kind": "sho"},
      "grid": {"n": 256, "qmin": -12.8, "extent": 25.6},
      "state": {"kind": "sho-coherent", "q0": 1.0}
    },
    "checkpoints": [0.5],
    "ensemble": {"n": 100, "seed": 1}
  })";

  SUBCASE("valid baseline") { CHECK_NOTHROW(parse_scenario_text(base)); }

  SUBCASE("unknown potential kind") {
    std::string bad = base;
    bad.replace(bad.find("\"sho\""), 5, "\"sh0\"");
    try {
      parse_scenario_text(bad);
      FAIL("expected a validation error");
    } catch (const ScenarioValidationError& e) {
      CHECK(e.location == "particle.potential.kind");
    }
  }

  SUBCASE("unknown scenario kind") {
    std::string bad = base;
    bad.replace(bad.find("born-rule"), 9, "bored-rule");
    try {
      parse_scenario_text(bad);
      FAIL("expected a validation error");
    } catch (const ScenarioValidationError& e) {
      CHECK(e.location == "kind");
    }
  }

  SUBCASE("missing mandatory seed") {
    std::string bad = base;
    bad.replace(bad.find("\"seed\": 1"), 9, "\"sead\": 1");
    try {
      parse_scenario_text(bad);
      FAIL("expected a validation error");
    } catch (const ScenarioValidationError& e) {
      CHECK(e.location == "ensemble.seed");
    }
  }

  SUBCASE("grid size must be a power of two") {
    std::string bad = base;
    bad.replace(bad.find("256"), 3, "257");
    try {
      parse_scenario_text(bad);
      FAIL("expected a validation error");
    } catch (const ScenarioValidationError& e) {
      CHECK(e.location == "particle.grid.n");
    }
  }

  SUBCASE("time-scale hierarchy violations name the model block") {
    std::string bad = base;
    bad.insert(bad.rfind('}'),
               ", \"model\": {\"dt\": 1e-3, \"tau_xi\": 1e-4}");
    try {
      parse_scenario_text(bad);
      FAIL("expected a validation error");
    } catch (const ScenarioValidationError& e) {
      CHECK(e.location == "model");
      CHECK(std::string(e.what()).find("hierarchy") != std::string::npos);
    }
  }

  SUBCASE("descending checkpoints rejected") {
    std::string bad = base;
    bad.replace(bad.find("[0.5]"), 5, "[0.5, 0.25]");
    CHECK_THROWS_AS(parse_scenario_text(bad), ScenarioValidationError);
  }
}

TEST_CASE("kind-specific completeness rules") {
  CHECK_THROWS_AS(
      parse_scenario_text(
          R"({"name":"d","kind":"deviation-law","ensemble":{"n":100,"seed":1}})"),
      ScenarioValidationError);  // lambda list missing
  CHECK_THROWS_AS(
      parse_scenario_text(
          R"({"name":"l","kind":"locality",
              "particle": {"potential": {"kind": "free"},
                           "grid": {"n": 64, "qmin": 0, "extent": 1},
                           "state": {"kind": "sho-ground"}},
              "checkpoints": [1.0], "ensemble": {"n": 100, "seed": 1}})"),
      ScenarioValidationError);  // locality needs two particles
}

TEST_CASE("scenario files load from disk") {
  const Scenario bundled = load_scenario("born-rule-quick");
  const std::string path = "test_scenario_tmp.json";
  {
    std::ofstream out(path);
    out << bundled.raw.dump(2);
  }
  const Scenario from_file = load_scenario(path);
  CHECK(from_file.name == bundled.name);
  CHECK(from_file.n == bundled.n);
  CHECK(from_file.master_seed == bundled.master_seed);
  std::remove(path.c_str());
}

TEST_CASE("parsed scenarios expose resolved systems") {
  const Scenario sc = load_scenario("locality-product");
  CHECK(sc.particles == 2);
  CHECK(sc.has_alt_v2);
  const ClassicalSystem sys = sc.system();
  CHECK(sys.dims == 2);
  CHECK(sys.separable());
  const Scenario dev = load_scenario("deviation-law");
  CHECK(dev.lambdas.size() == 3);
  CHECK(dev.n == 1000000);
}
