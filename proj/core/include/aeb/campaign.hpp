#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aeb/protocol.hpp"

namespace aeb {

enum class Sensor { Radar, CornerRadar, Camera, Lidar };

std::string_view to_string(Sensor sensor);
Sensor parse_sensor(std::string_view name);

inline constexpr double kDefaultVehicleMassKg = 1500.0;

struct VehicleProfile {
  std::string id;
  std::optional<int> model_year;
  std::vector<Sensor> sensors;
  double mass_kg = kDefaultVehicleMassKg;
  bool is_prototype = false;
};

enum class OutcomeKind { Avoided, Impacted, JudgedFailed, NotExecuted };

std::string_view to_string(OutcomeKind kind);
OutcomeKind parse_outcome_kind(std::string_view name);

struct TestOutcome {
  OutcomeKind kind = OutcomeKind::NotExecuted;
  std::optional<double> impact_speed;  // km/h, present iff impacted
  bool intervention = false;
  bool projected = false;

  static TestOutcome avoided() { return {OutcomeKind::Avoided, std::nullopt, true, false}; }
  static TestOutcome impacted(double speed_kmh, bool intervention = true, bool projected = false) {
    return {OutcomeKind::Impacted, speed_kmh, intervention, projected};
  }
  static TestOutcome judged_failed() { return {OutcomeKind::JudgedFailed, std::nullopt, false, false}; }

  bool executed() const { return kind == OutcomeKind::Avoided || kind == OutcomeKind::Impacted; }
  // Anything that counts as "not avoided" for escalation and scoring.
  bool failed() const { return kind == OutcomeKind::Impacted || kind == OutcomeKind::JudgedFailed; }

  friend bool operator==(const TestOutcome&, const TestOutcome&) = default;
};

// Empty string when the outcome is consistent with its configuration,
// otherwise a human-readable reason.
std::string outcome_violation(const TestOutcome& outcome, const TestConfig& config);

enum class PreTest { Passed, Failed };

std::string_view to_string(PreTest pre_test);
PreTest parse_pre_test(std::string_view name);

struct TestRecord {
  std::string vehicle;
  TestConfig config;
  TestOutcome outcome;
  std::optional<PreTest> pre_test;

  friend bool operator==(const TestRecord&, const TestRecord&) = default;
};

struct CampaignLog {
  std::shared_ptr<const ProtocolDefinition> protocol;
  std::vector<VehicleProfile> vehicles;
  std::vector<TestRecord> records;

  const VehicleProfile* find_vehicle(std::string_view id) const;
  // Vehicle ids from the profile list and from the records, in natural order.
  std::vector<std::string> vehicle_ids() const;
  double vehicle_mass(std::string_view id) const;
};

// Deterministic braking response used to replay the escalation procedure.
class BrakingOracle {
 public:
  virtual ~BrakingOracle() = default;
  virtual TestOutcome respond(const TestConfig& config) = 0;
  // Low-speed probe run before scenarios that require it. True means the AEB
  // reacted and the incremental procedure may proceed.
  virtual bool pretest(const ScenarioSpec& /*spec*/, int /*overlap*/, Light /*light*/) {
    return true;
  }
};

// Adapter for lambdas and test doubles.
class FunctionOracle final : public BrakingOracle {
 public:
  using RespondFn = std::function<TestOutcome(const TestConfig&)>;
  using PretestFn = std::function<bool(const ScenarioSpec&, int, Light)>;

  explicit FunctionOracle(RespondFn respond, PretestFn pretest = {})
      : respond_(std::move(respond)), pretest_(std::move(pretest)) {}

  TestOutcome respond(const TestConfig& config) override { return respond_(config); }
  bool pretest(const ScenarioSpec& spec, int overlap, Light light) override {
    return pretest_ ? pretest_(spec, overlap, light) : true;
  }

 private:
  RespondFn respond_;
  PretestFn pretest_;
};

struct RunOptions {
  // Stop escalating on the first outcome that is not "avoided". When false,
  // only a missing intervention (no AEB response) stops the series.
  bool stop_on_impact = true;
};

// Runs the incremental procedure for every series of (spec, overlap, light):
// start at the lowest lattice speed, escalate one step at a time, and record
// every speed above the first failure as judged_failed. A failed pre-test
// judges the whole scenario setting without executing anything.
// Throws OutcomeError when the oracle returns an inconsistent outcome.
std::vector<TestRecord> run_scenario(BrakingOracle& oracle, const std::string& vehicle,
                                     const ScenarioSpec& spec, int overlap, Light light,
                                     bool requires_pretest, const RunOptions& options = {});

// Adds judged_failed night records at the settings of every failed day test
// whose night counterpart is licensed but absent. Existing records are kept.
CampaignLog expand_night_judgements(const CampaignLog& log);

struct Diagnostic {
  std::size_t record_index = 0;  // position in CampaignLog::records
  std::string message;
};

std::vector<Diagnostic> validate_log(const CampaignLog& log, const RunOptions& options = {});

struct CompletionStats {
  std::string vehicle;
  std::size_t expected = 0;
  std::size_t executed = 0;
  std::size_t judged = 0;
  int completion_percent = 0;
};

// round((executed + judged) / expected * 100), 0 when expected is 0.
int completion_percent(std::size_t expected, std::size_t executed, std::size_t judged);

std::vector<CompletionStats> completion_stats(const CampaignLog& log);

// Natural ordering for vehicle ids: digit runs compare numerically, so "2"
// sorts before "10" and "1A" before "1B".
bool natural_less(std::string_view a, std::string_view b);

// ---- file formats ----------------------------------------------------------

enum class LogFormat { JsonLines, Csv };

// Parses a campaign log against a protocol. Accepts JSON-lines or CSV with the
// same column names; the format is detected from the first non-blank line.
// Throws SchemaError with the 1-based line number on malformed input.
std::vector<TestRecord> parse_log_records(std::string_view text,
                                          const ProtocolDefinition& protocol);
CampaignLog load_log(const std::string& path, std::shared_ptr<const ProtocolDefinition> protocol);

std::string serialize_log_records(const std::vector<TestRecord>& records, LogFormat format);

// Vehicle list: either a JSON array of profiles or an object with a
// "vehicles" array (so an oracle spec doubles as a vehicle file).
std::vector<VehicleProfile> parse_vehicles(std::string_view json_text);
std::vector<VehicleProfile> load_vehicles(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view contents);

}  // namespace aeb
