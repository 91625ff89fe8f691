#include "aeb/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "aeb/error.hpp"
#include "json.hpp"

namespace aeb {

double WeightTable::weight(const ScenarioInstance& instance) const {
  auto it = weights.find(instance);
  return it == weights.end() ? 0.0 : it->second;
}

namespace {

std::string instance_name(const ScenarioInstance& instance) {
  return instance.first + "/" + std::string(to_string(instance.second));
}

const ScenarioScore* find_score(std::span<const ScenarioScore> scores,
                                const ScenarioInstance& instance) {
  for (const auto& s : scores) {
    if (s.scenario == instance.first && s.light == instance.second) return &s;
  }
  return nullptr;
}

struct Accumulator {
  double weight = 0.0;
  double nominal = 0.0;
  double lower = 0.0;
  double upper = 0.0;

  void add(double w, const ScoreValue& v) {
    weight += w;
    nominal += w * v.nominal;
    lower += w * v.lower;
    upper += w * v.upper;
  }

  ScoreValue finish(const std::string& what) const {
    if (!(weight > 0.0)) throw ScoringError(what + ": applicable weight sums to zero");
    return ScoreValue::from_triple(nominal / weight, lower / weight, upper / weight);
  }
};

template <typename InstanceWeight, typename ScoreOf>
ScoreValue aggregate(std::span<const ScenarioScore> scores, const WeightTable& table,
                     ScenarioGroup group, NaPolicy policy, const char* metric,
                     InstanceWeight instance_weight, ScoreOf score_of) {
  const std::string what = std::string(metric) + " " + std::string(to_string(group)) + " (" +
                           table.region + ")";
  auto members = table.groups.find(group);
  if (members == table.groups.end() || members->second.empty()) {
    throw ScoringError(what + ": weight table lists no scenarios for this group");
  }
  Accumulator acc;
  for (const auto& instance : members->second) {
    const double w = table.weight(instance);
    if (w == 0.0) continue;
    const auto* score = find_score(scores, instance);
    if (score == nullptr) {
      throw ScoringError(what + ": no scenario score for " + instance_name(instance));
    }
    if (score->not_applicable) {
      if (policy == NaPolicy::CountZero) acc.add(instance_weight(instance, w), ScoreValue::zero());
      continue;
    }
    acc.add(instance_weight(instance, w), score_of(*score));
  }
  return acc.finish(what);
}

ScenarioInstance parse_instance(const nlohmann::json& node, const std::string& where) {
  if (node.is_string()) {
    const auto text = node.get<std::string>();
    const auto slash = text.rfind('/');
    if (slash == std::string::npos) {
      throw SchemaError(where + ": expected \"scenario/light\", got '" + text + "'");
    }
    try {
      return {text.substr(0, slash), parse_light(text.substr(slash + 1))};
    } catch (const UnknownKeyError& e) {
      throw SchemaError(where + ": " + e.what());
    }
  }
  if (!node.is_object() || !node.contains("scenario") || !node["scenario"].is_string() ||
      !node.contains("light") || !node["light"].is_string()) {
    throw SchemaError(where + ": expected {scenario, light}");
  }
  try {
    return {node["scenario"].get<std::string>(), parse_light(node["light"].get<std::string>())};
  } catch (const UnknownKeyError& e) {
    throw SchemaError(where + ": " + e.what());
  }
}

std::optional<int> optional_int(const nlohmann::json& node, const char* field,
                                const std::string& where) {
  auto it = node.find(field);
  if (it == node.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer()) throw SchemaError(where + "." + field + ": expected an integer");
  return it->get<int>();
}

}  // namespace

void validate_weight_table(const WeightTable& table, const ProtocolDefinition& protocol) {
  auto check_instance = [&](const ScenarioInstance& instance, const std::string& where) {
    const auto* spec = protocol.find(instance.first);
    if (spec == nullptr) {
      throw SchemaError(where + ": unknown scenario '" + instance.first + "'");
    }
    if (!spec->licenses(instance.second)) {
      throw SchemaError(where + ": " + instance_name(instance) +
                        " is not licensed by the protocol");
    }
    return spec;
  };
  for (const auto& [instance, w] : table.weights) {
    check_instance(instance, "weights " + instance_name(instance));
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw SchemaError("weights " + instance_name(instance) + ": weight must be >= 0");
    }
  }
  for (const auto& [group, members] : table.groups) {
    const std::string where = "groups." + std::string(to_string(group));
    double total = 0.0;
    for (const auto& instance : members) {
      const auto* spec = check_instance(instance, where);
      if (spec->group != group) {
        throw SchemaError(where + ": " + instance.first + " belongs to group " +
                          std::string(to_string(spec->group)));
      }
      total += table.weight(instance);
    }
    if (!(total > 0.0)) throw SchemaError(where + ": weights sum to zero");
  }
  for (const auto& rule : table.config_weights.rules()) {
    if (protocol.find(rule.scenario) == nullptr) {
      throw SchemaError("config_weights: unknown scenario '" + rule.scenario + "'");
    }
    if (!(rule.weight > 0.0) || !std::isfinite(rule.weight)) {
      throw SchemaError("config_weights " + rule.scenario + ": weight must be > 0");
    }
  }
}

WeightTable parse_weight_table(std::string_view json_text, const ProtocolDefinition& protocol) {
  using Json = nlohmann::json;
  Json doc;
  try {
    doc = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw SchemaError(std::string("weight table: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("weight table: expected an object");

  WeightTable table;
  if (!doc.contains("region") || !doc["region"].is_string()) {
    throw SchemaError("weight table.region: missing or not a string");
  }
  table.region = doc["region"].get<std::string>();

  const auto weights = doc.find("weights");
  if (weights == doc.end() || !weights->is_array()) {
    throw SchemaError("weight table.weights: missing or not an array");
  }
  for (std::size_t i = 0; i < weights->size(); ++i) {
    const auto& node = (*weights)[i];
    const std::string where = "weights[" + std::to_string(i) + "]";
    auto instance = parse_instance(node, where);
    if (!node.contains("w") || !node["w"].is_number()) {
      throw SchemaError(where + ".w: missing or not a number");
    }
    if (!table.weights.emplace(instance, node["w"].get<double>()).second) {
      throw SchemaError(where + ": duplicate weight for " + instance_name(instance));
    }
  }

  if (auto groups = doc.find("groups"); groups != doc.end()) {
    if (!groups->is_object()) throw SchemaError("weight table.groups: expected an object");
    for (auto& [name, members] : groups->items()) {
      ScenarioGroup group{};
      try {
        group = parse_group(name);
      } catch (const UnknownKeyError& e) {
        throw SchemaError(std::string("weight table.groups: ") + e.what());
      }
      if (!members.is_array()) throw SchemaError("groups." + name + ": expected an array");
      auto& list = table.groups[group];
      for (std::size_t i = 0; i < members.size(); ++i) {
        list.push_back(parse_instance(members[i], "groups." + name + "[" + std::to_string(i) + "]"));
      }
    }
  } else {
    // Protocol order keeps group membership deterministic.
    for (const auto& spec : protocol.scenarios()) {
      for (Light light : kAllLights) {
        ScenarioInstance instance{spec.code, light};
        if (table.weights.count(instance)) table.groups[spec.group].push_back(instance);
      }
    }
  }

  if (auto cw = doc.find("config_weights"); cw != doc.end()) {
    if (!cw->is_array()) throw SchemaError("weight table.config_weights: expected an array");
    for (std::size_t i = 0; i < cw->size(); ++i) {
      const auto& node = (*cw)[i];
      const std::string where = "config_weights[" + std::to_string(i) + "]";
      if (!node.is_object() || !node.contains("scenario") || !node["scenario"].is_string()) {
        throw SchemaError(where + ".scenario: missing or not a string");
      }
      ConfigWeights::Rule rule;
      rule.scenario = node["scenario"].get<std::string>();
      if (node.contains("light")) {
        try {
          rule.light = parse_light(node["light"].get<std::string>());
        } catch (const std::exception& e) {
          throw SchemaError(where + ".light: " + e.what());
        }
      }
      rule.overlap = optional_int(node, "overlap", where);
      rule.vut_speed = optional_int(node, "vut_speed", where);
      rule.tg_speed = optional_int(node, "tg_speed", where);
      if (!node.contains("w") || !node["w"].is_number()) {
        throw SchemaError(where + ".w: missing or not a number");
      }
      rule.weight = node["w"].get<double>();
      table.config_weights.add(std::move(rule));
    }
  }

  validate_weight_table(table, protocol);
  return table;
}

WeightTable load_weight_table(const std::string& path, const ProtocolDefinition& protocol) {
  try {
    return parse_weight_table(read_text_file(path), protocol);
  } catch (const SchemaError& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

ScoreValue aggregate_fs(std::span<const ScenarioScore> scores, const WeightTable& table,
                        ScenarioGroup group, NaPolicy policy) {
  return aggregate(
      scores, table, group, policy, "FS",
      [](const ScenarioInstance&, double w) { return w; },
      [](const ScenarioScore& s) { return s.fs.value_or(ScoreValue::zero()); });
}

ScoreValue aggregate_mps(std::span<const ScenarioScore> scores, const WeightTable& table,
                         ScenarioGroup group, const PassivePowers& powers, NaPolicy policy) {
  return aggregate(
      scores, table, group, policy, "MPS",
      [&](const ScenarioInstance& instance, double w) {
        auto it = powers.find(instance);
        if (it == powers.end() || !(it->second > 0.0)) {
          throw ScoringError("MPS: passive impact power for " + instance_name(instance) +
                             " must be positive");
        }
        return w * it->second;
      },
      [](const ScenarioScore& s) { return s.mps.value_or(ScoreValue::zero()); });
}

PassivePowers passive_powers(const ProtocolDefinition& protocol, const ImpactPowerModel& model,
                             double vut_mass_kg, const ConfigWeights* weights) {
  PassivePowers powers;
  for (const auto& spec : protocol.scenarios()) {
    for (Light light : kAllLights) {
      const auto configs = enumerate_configs(spec, light);
      if (configs.empty()) continue;
      double total_w = 0.0, total = 0.0;
      for (const auto& c : configs) {
        const double w = weights ? weights->weight(c) : 1.0;
        total_w += w;
        total += w * passive_mu_pow(model, c, vut_mass_kg);
      }
      powers[{spec.code, light}] = total / total_w;
    }
  }
  return powers;
}

std::vector<GroupScore> aggregate_group(std::span<const ScenarioScore> scores,
                                        const CampaignLog& log, const WeightTable& table,
                                        const ImpactPowerModel& model, ScenarioGroup group,
                                        NaPolicy policy) {
  if (!log.protocol) throw ScoringError("campaign log has no protocol");
  std::vector<std::string> vehicles;
  for (const auto& s : scores) {
    if (std::find(vehicles.begin(), vehicles.end(), s.vehicle) == vehicles.end()) {
      vehicles.push_back(s.vehicle);
    }
  }
  const ConfigWeights* cw = table.config_weights.empty() ? nullptr : &table.config_weights;
  std::map<double, PassivePowers> powers_by_mass;

  std::vector<GroupScore> out;
  for (const auto& vehicle : vehicles) {
    std::vector<ScenarioScore> own;
    for (const auto& s : scores) {
      if (s.vehicle == vehicle) own.push_back(s);
    }
    const auto members = table.groups.find(group);
    const bool tested = members != table.groups.end() &&
                        std::any_of(members->second.begin(), members->second.end(),
                                    [&](const ScenarioInstance& instance) {
                                      const auto* s = find_score(own, instance);
                                      return table.weight(instance) > 0.0 && s != nullptr &&
                                             !s->not_applicable;
                                    });
    if (!tested && policy == NaPolicy::Exclude) continue;
    const double mass = log.vehicle_mass(vehicle);
    auto it = powers_by_mass.find(mass);
    if (it == powers_by_mass.end()) {
      it = powers_by_mass.emplace(mass, passive_powers(*log.protocol, model, mass, cw)).first;
    }
    out.push_back({vehicle, group, table.region, aggregate_fs(own, table, group, policy),
                   aggregate_mps(own, table, group, it->second, policy)});
  }
  return out;
}

std::string_view to_string(Metric metric) { return metric == Metric::Freq ? "freq" : "MP"; }

RelCell relativity(double score_x, double score_y) {
  if (!std::isfinite(score_x) || !std::isfinite(score_y) || score_x < 0.0 || score_y < 0.0) {
    throw std::invalid_argument("relativity needs finite, non-negative scores");
  }
  if (score_y == 0.0) {
    if (score_x == 0.0) return {RelCell::Kind::Finite, 0.0};
    return {RelCell::Kind::PosInf, 0.0};
  }
  return {RelCell::Kind::Finite, score_x / score_y - 1.0};
}

RelativityMatrix build_matrix(std::span<const GroupScore> group_scores, Metric metric) {
  RelativityMatrix m;
  m.metric = metric;
  if (!group_scores.empty()) {
    m.group = group_scores.front().group;
    m.region = group_scores.front().region;
  }
  auto value = [metric](const GroupScore& g) {
    return metric == Metric::Freq ? g.fs.nominal : g.mps.nominal;
  };

  std::vector<std::size_t> index(group_scores.size());
  std::iota(index.begin(), index.end(), std::size_t{0});
  std::stable_sort(index.begin(), index.end(), [&](std::size_t a, std::size_t b) {
    const double va = value(group_scores[a]);
    const double vb = value(group_scores[b]);
    if (va != vb) return va > vb;
    return natural_less(group_scores[a].vehicle, group_scores[b].vehicle);
  });

  for (std::size_t i : index) {
    m.order.push_back(group_scores[i].vehicle);
    m.scores.push_back(value(group_scores[i]));
  }
  const std::size_t n = m.order.size();
  m.cells.resize(n * n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      m.cells[r * n + c] = r == c ? RelCell{} : relativity(m.scores[r], m.scores[c]);
    }
  }
  return m;
}

}  // namespace aeb
