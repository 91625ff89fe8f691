#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aeb {

enum class ScenarioGroup { C2C, C2VRU, C2O };

inline constexpr ScenarioGroup kAllGroups[] = {ScenarioGroup::C2C, ScenarioGroup::C2VRU,
                                               ScenarioGroup::C2O};

enum class Light { Day, Night };

inline constexpr Light kAllLights[] = {Light::Day, Light::Night};

std::string_view to_string(ScenarioGroup group);
std::string_view to_string(Light light);
// Throw UnknownKeyError on unrecognised names.
ScenarioGroup parse_group(std::string_view name);
Light parse_light(std::string_view name);

// Inclusive VUT speed interval in km/h.
struct SpeedRange {
  int min_kmh = 0;
  int max_kmh = 0;

  friend bool operator==(const SpeedRange&, const SpeedRange&) = default;
};

// How the target speeds listed for a scenario combine with the VUT lattice.
enum class TargetSpeedMode {
  // Every target speed is crossed with every VUT speed (e.g. Scooter 5/10/15).
  Crossed,
  // tg_speeds[i] belongs to vut_speed_ranges[i]. The VUT lattice is the union
  // of all ranges; each lattice speed takes the target speed of the narrowest
  // range containing it.
  Paired,
  // tg_speeds = {lo, hi} is a target speed interval that is not a test
  // dimension; configurations carry the lower bound.
  Range,
};

std::string_view to_string(TargetSpeedMode mode);
TargetSpeedMode parse_target_speed_mode(std::string_view name);

// Settings that may differ between the day and night variant of a scenario.
struct LightVariant {
  Light light = Light::Day;
  std::vector<SpeedRange> vut_speed_ranges;
  std::vector<int> overlaps;  // percent, ascending

  friend bool operator==(const LightVariant&, const LightVariant&) = default;
};

struct ScenarioSpec {
  std::string code;
  ScenarioGroup group = ScenarioGroup::C2C;
  std::vector<int> tg_speeds;  // km/h, empty for stationary targets
  TargetSpeedMode tg_mode = TargetSpeedMode::Crossed;
  int speed_step = 10;
  std::vector<LightVariant> variants;  // day before night, at most one each
  bool requires_pretest = false;
  std::string description;

  bool licenses(Light light) const;
  // Nullptr when the light is not licensed.
  const LightVariant* variant(Light light) const;

  friend bool operator==(const ScenarioSpec&, const ScenarioSpec&) = default;
};

// One concrete test setting. Self-contained value: it carries the scenario
// code and group so downstream code never needs a back-pointer.
struct TestConfig {
  std::string scenario;
  ScenarioGroup group = ScenarioGroup::C2C;
  int vut_speed = 0;
  std::optional<int> tg_speed;
  int overlap = 100;
  Light light = Light::Day;

  friend bool operator==(const TestConfig&, const TestConfig&) = default;
  friend auto operator<=>(const TestConfig&, const TestConfig&) = default;
};

std::string describe(const TestConfig& config);

// Escalation unit inside one scenario and light: speeds rise along a series
// while overlap (and, for crossed target speeds, the target speed) is fixed.
struct SeriesKey {
  std::string scenario;
  Light light = Light::Day;
  int overlap = 100;
  std::optional<int> tg_speed;  // set only for TargetSpeedMode::Crossed

  friend bool operator==(const SeriesKey&, const SeriesKey&) = default;
  friend auto operator<=>(const SeriesKey&, const SeriesKey&) = default;
};

SeriesKey series_key(const ScenarioSpec& spec, const TestConfig& config);

struct ConfigFilter {
  std::optional<std::string> scenario;
  std::optional<Light> light;
  std::optional<ScenarioGroup> group;
};

class ProtocolDefinition {
 public:
  ProtocolDefinition() = default;
  // Validates every scenario; throws SchemaError / LatticeError.
  ProtocolDefinition(std::vector<ScenarioSpec> scenarios, std::string provenance,
                     std::vector<std::string> notes = {});

  const std::vector<ScenarioSpec>& scenarios() const { return scenarios_; }
  const std::string& provenance() const { return provenance_; }
  const std::vector<std::string>& notes() const { return notes_; }

  // Nullptr when the code is unknown.
  const ScenarioSpec* find(std::string_view code) const;
  // Throws UnknownKeyError.
  const ScenarioSpec& at(std::string_view code) const;

  // True when the configuration is one the protocol enumerates.
  bool contains(const TestConfig& config) const;

  std::size_t config_count() const;

 private:
  std::vector<ScenarioSpec> scenarios_;
  std::string provenance_;
  std::vector<std::string> notes_;
};

// Throws SchemaError / LatticeError describing the first violation.
void validate_scenario(const ScenarioSpec& spec);

// Ascending, de-duplicated union of the lattices of every range of the given
// light variant.
std::vector<int> speed_lattice(const ScenarioSpec& spec, Light light);
std::vector<int> speed_lattice(const std::vector<SpeedRange>& ranges, int step);

// Target speeds that apply to a VUT speed. Empty optional for stationary
// targets; several entries only for TargetSpeedMode::Crossed.
std::vector<std::optional<int>> target_speeds_at(const ScenarioSpec& spec, Light light,
                                                 int vut_speed);

// Ordered by scenario, then day before night, then overlap, then VUT speed,
// then target speed. Throws UnknownKeyError for filters naming nothing.
std::vector<TestConfig> enumerate_configs(const ProtocolDefinition& protocol,
                                          const ConfigFilter& filter = {});
std::vector<TestConfig> enumerate_configs(const ScenarioSpec& spec, Light light);

// JSON document <-> protocol. Throws SchemaError naming the field and its
// location (scenario index and code).
ProtocolDefinition parse_protocol(std::string_view json_text);
ProtocolDefinition load_protocol(const std::string& path);
std::string serialize_protocol(const ProtocolDefinition& protocol);

}  // namespace aeb
