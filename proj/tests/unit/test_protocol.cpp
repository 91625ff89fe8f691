#include <doctest.h>

#include <set>

#include "aeb/error.hpp"
#include "aeb/protocol.hpp"
#include "reference.hpp"

using namespace aeb;

namespace {

std::size_t count(const ProtocolDefinition& p, const std::string& code, Light light) {
  return enumerate_configs(p, {code, light, std::nullopt}).size();
}

ScenarioSpec simple_spec() {
  ScenarioSpec s;
  s.code = "X";
  s.group = ScenarioGroup::C2O;
  s.speed_step = 10;
  s.variants = {{Light::Day, {{55, 125}}, {100}}};
  return s;
}

}  // namespace

TEST_CASE("bundled protocol enumerates 224 configurations") {
  const auto p = ref::bundled_protocol();
  CHECK(p->config_count() == 224);
  CHECK(enumerate_configs(*p).size() == 224);
  CHECK(count(*p, "CCRm", Light::Day) == 32);
  CHECK(count(*p, "CCRm", Light::Night) == 8);
  CHECK(count(*p, "CCRs", Light::Day) == 32);
}

TEST_CASE("group totals of the bundled protocol") {
  const auto p = ref::bundled_protocol();
  CHECK(enumerate_configs(*p, {std::nullopt, std::nullopt, ScenarioGroup::C2C}).size() == 112);
  CHECK(enumerate_configs(*p, {std::nullopt, std::nullopt, ScenarioGroup::C2VRU}).size() == 86);
  CHECK(enumerate_configs(*p, {std::nullopt, std::nullopt, ScenarioGroup::C2O}).size() == 26);
}

TEST_CASE("enumeration is unique, sorted within a series and matches a rebuilt lattice") {
  const auto p = ref::bundled_protocol();
  const auto all = enumerate_configs(*p);
  std::set<TestConfig> unique(all.begin(), all.end());
  CHECK(unique.size() == all.size());
  std::size_t rebuilt = 0;
  for (const auto& spec : p->scenarios()) {
    for (Light light : kAllLights) {
      for (const auto& s : ref::series_of(spec, light)) {
        rebuilt += s.size();
        for (const auto& c : s) CHECK(p->contains(c));
      }
    }
  }
  CHECK(rebuilt == all.size());
}

TEST_CASE("paired target speeds take the narrowest containing range") {
  const auto p = ref::bundled_protocol();
  const auto& spec = p->at("CCscp left");
  REQUIRE(spec.tg_mode == TargetSpeedMode::Paired);
  CHECK(target_speeds_at(spec, Light::Day, 45).front() == 35);
  CHECK(target_speeds_at(spec, Light::Day, 85).front() == 15);
  CHECK(speed_lattice(spec, Light::Day).size() == 7);
}

TEST_CASE("crossed target speeds multiply the lattice") {
  const auto p = ref::bundled_protocol();
  const auto& spec = p->at("Scooter");
  CHECK(spec.tg_mode == TargetSpeedMode::Crossed);
  CHECK(target_speeds_at(spec, Light::Day, speed_lattice(spec, Light::Day).front()).size() ==
        spec.tg_speeds.size());
}

TEST_CASE("night-only and day-only scenarios") {
  const auto p = ref::bundled_protocol();
  CHECK_FALSE(p->at("CPLAs").licenses(Light::Day));
  CHECK(p->at("CPLAs").licenses(Light::Night));
  CHECK(p->at("CPLAs").variant(Light::Day) == nullptr);
}

TEST_CASE("speed lattice of a single range") {
  CHECK(speed_lattice({{55, 125}}, 10) == std::vector<int>{55, 65, 75, 85, 95, 105, 115, 125});
  CHECK(speed_lattice({{15, 25}}, 10) == std::vector<int>{15, 25});
  CHECK(speed_lattice({{45, 45}}, 10) == std::vector<int>{45});
}

TEST_CASE("lattice errors are rejected") {
  auto s = simple_spec();
  s.variants[0].vut_speed_ranges = {{55, 120}};
  CHECK_THROWS_AS(validate_scenario(s), LatticeError);
  s = simple_spec();
  s.speed_step = 0;
  CHECK_THROWS_AS(validate_scenario(s), SchemaError);
  s = simple_spec();
  s.variants[0].vut_speed_ranges = {{80, 60}};
  CHECK_THROWS_AS(validate_scenario(s), SchemaError);
  s = simple_spec();
  s.variants[0].overlaps = {120};
  CHECK_THROWS_AS(validate_scenario(s), SchemaError);
  CHECK_NOTHROW(validate_scenario(simple_spec()));
}

TEST_CASE("unknown filter keys throw") {
  const auto p = ref::bundled_protocol();
  CHECK_THROWS_AS(enumerate_configs(*p, {std::string("CCXX"), std::nullopt, std::nullopt}),
                  UnknownKeyError);
  CHECK_THROWS_AS(p->at("nope"), UnknownKeyError);
  CHECK(p->find("nope") == nullptr);
  CHECK_THROWS_AS(parse_light("dusk"), UnknownKeyError);
  CHECK_THROWS_AS(parse_group("C2X"), UnknownKeyError);
}

TEST_CASE("serialize and parse round-trip") {
  const auto p = ref::bundled_protocol();
  const auto again = parse_protocol(serialize_protocol(*p));
  CHECK(again.scenarios() == p->scenarios());
  CHECK(again.config_count() == 224);
  CHECK(serialize_protocol(again) == serialize_protocol(*p));
}

TEST_CASE("schema errors name the field") {
  CHECK_THROWS_AS(parse_protocol("{"), SchemaError);
  CHECK_THROWS_AS(parse_protocol(R"({"scenarios": 3})"), SchemaError);
  try {
    parse_protocol(R"({"provenance": "t", "scenarios": [{"code": "A", "group": "C2O",
      "vut_speed_ranges": [[55, 120]], "speed_step": 10, "overlaps": [100], "lights": ["day"]}]})");
    FAIL("expected an exception");
  } catch (const LatticeError& e) {
    CHECK(std::string(e.what()).find("A") != std::string::npos);
  }
}

TEST_CASE("a minimal one-scenario protocol") {
  const auto p = parse_protocol(R"({"provenance": "t", "scenarios": [{"code": "P", "group": "C2O",
    "vut_speed_ranges": [[45, 105]], "speed_step": 10, "overlaps": [100], "lights": ["night"]}]})");
  CHECK(p.config_count() == 7);
  CHECK(enumerate_configs(p).front().light == Light::Night);
}
