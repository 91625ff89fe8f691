#include "cli.hpp"

#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "aeb/aggregation.hpp"
#include "aeb/campaign.hpp"
#include "aeb/error.hpp"
#include "aeb/impact.hpp"
#include "aeb/protocol.hpp"
#include "aeb/report.hpp"
#include "aeb/scoring.hpp"
#include "aeb/simulation.hpp"

namespace aeb::cli {

namespace {

namespace fs = std::filesystem;

struct Options {
  std::string protocol;
  std::string log;
  std::vector<std::string> weights;
  std::string out;
  std::vector<std::string> formats;
  std::optional<std::uint64_t> seed;
  std::string impact_model;
  std::string vehicles;
  std::string oracle;
  std::string log_format = "jsonl";
  std::string na_policy = "exclude";
  bool continue_on_impact = false;
};

struct Inputs {
  std::shared_ptr<const ProtocolDefinition> protocol;
  CampaignLog log;
  ImpactPowerModel model;
  std::vector<WeightTable> tables;
  std::vector<ReportFormat> formats;
};

std::shared_ptr<const ProtocolDefinition> read_protocol(const Options& o) {
  return std::make_shared<const ProtocolDefinition>(load_protocol(o.protocol));
}

CampaignLog read_log(const Options& o, std::shared_ptr<const ProtocolDefinition> protocol) {
  CampaignLog log;
  try {
    log = load_log(o.log, std::move(protocol));
  } catch (const SchemaError& e) {
    throw SchemaError(o.log + ": " + e.what());
  }
  if (!o.vehicles.empty()) log.vehicles = load_vehicles(o.vehicles);
  return log;
}

RunOptions run_options(const Options& o) {
  RunOptions r;
  r.stop_on_impact = !o.continue_on_impact;
  return r;
}

std::vector<ReportFormat> read_formats(const Options& o) {
  std::vector<ReportFormat> formats;
  for (const auto& f : o.formats) {
    auto parsed = parse_report_format(f);
    if (std::find(formats.begin(), formats.end(), parsed) == formats.end()) {
      formats.push_back(parsed);
    }
  }
  if (formats.empty()) formats.push_back(ReportFormat::Csv);
  return formats;
}

// Prints diagnostics and reports whether the log is clean.
bool check_log(const CampaignLog& log, const RunOptions& options, std::ostream& err) {
  const auto diagnostics = validate_log(log, options);
  for (const auto& d : diagnostics) err << d.message << '\n';
  return diagnostics.empty();
}

Inputs read_scoring_inputs(const Options& o) {
  if (o.weights.empty()) throw SchemaError("at least one --weights table is required");
  Inputs in;
  in.protocol = read_protocol(o);
  in.log = read_log(o, in.protocol);
  if (!o.impact_model.empty()) in.model = load_impact_model(o.impact_model);
  for (const auto& path : o.weights) in.tables.push_back(load_weight_table(path, *in.protocol));
  in.formats = read_formats(o);
  return in;
}

void write_output(const fs::path& dir, const std::string& stem, ReportFormat format,
                  const std::string& contents) {
  fs::create_directories(dir);
  write_text_file((dir / (stem + "." + std::string(file_extension(format)))).string(), contents);
}

NaPolicy na_policy(const Options& o) {
  return o.na_policy == "zero" ? NaPolicy::CountZero : NaPolicy::Exclude;
}

int cmd_validate(const Options& o, std::ostream&, std::ostream& err) {
  auto protocol = read_protocol(o);
  auto log = read_log(o, protocol);
  return check_log(log, run_options(o), err) ? kOk : kFindings;
}

int cmd_score(const Options& o, std::ostream& out, std::ostream& err) {
  auto in = read_scoring_inputs(o);
  if (!check_log(in.log, run_options(o), err)) return kFindings;
  for (const auto& table : in.tables) {
    const ConfigWeights* cw = table.config_weights.empty() ? nullptr : &table.config_weights;
    const auto scores = score_campaign(in.log, in.model, cw);
    for (auto kind : {ScoreKind::FS, ScoreKind::MPS}) {
      for (Light light : kAllLights) {
        const auto t = build_scenario_table(scores, *in.protocol, kind, light, table.region);
        for (auto format : in.formats) write_output(o.out, t.title, format, render(t, format));
        out << t.title << '\n';
      }
    }
  }
  return kOk;
}

std::string group_scores_csv(const std::vector<std::vector<GroupScore>>& groups) {
  std::ostringstream csv;
  csv << "vehicle,group,region,fs,mps,fs_nominal,mps_nominal\n";
  for (const auto& list : groups) {
    for (const auto& g : list) {
      csv << vehicle_label(g.vehicle) << ',' << to_string(g.group) << ',' << g.region << ','
          << format_score_cell(g.fs) << ',' << format_score_cell(g.mps) << ','
          << format_decimal2(g.fs.nominal) << ',' << format_decimal2(g.mps.nominal) << '\n';
    }
  }
  return csv.str();
}

int cmd_compare(const Options& o, std::ostream& out, std::ostream& err) {
  auto in = read_scoring_inputs(o);
  if (!check_log(in.log, run_options(o), err)) return kFindings;
  for (const auto& table : in.tables) {
    const ConfigWeights* cw = table.config_weights.empty() ? nullptr : &table.config_weights;
    const auto scores = score_campaign(in.log, in.model, cw);
    std::vector<std::vector<GroupScore>> all_groups;
    for (const auto& [group, members] : table.groups) {
      const auto group_scores =
          aggregate_group(scores, in.log, table, in.model, group, na_policy(o));
      all_groups.push_back(group_scores);
      for (auto metric : {Metric::Freq, Metric::MP}) {
        const auto matrix = build_matrix(group_scores, metric);
        const std::string stem = std::string("REL_") +
                                 (metric == Metric::Freq ? "FREQ_" : "MP_") +
                                 std::string(to_string(group)) + "_" + table.region;
        for (auto format : in.formats) write_output(o.out, stem, format, render(matrix, format));
        out << stem << '\n';
      }
    }
    write_output(o.out, "GROUP_SCORES_" + table.region, ReportFormat::Csv,
                 group_scores_csv(all_groups));
  }
  return kOk;
}

int cmd_simulate(const Options& o, std::ostream& out, std::ostream& err) {
  auto protocol = read_protocol(o);
  const auto spec = load_oracle_spec(o.oracle, *protocol);
  const std::uint64_t seed = o.seed.value_or(spec.seed.value_or(0));
  const auto log = simulate_campaign(protocol, spec, seed);
  if (!check_log(log, spec.run_options, err)) return kFindings;

  const bool csv = o.log_format == "csv";
  const fs::path dir(o.out);
  fs::create_directories(dir);
  const auto log_path = dir / (csv ? "campaign.csv" : "campaign.jsonl");
  write_text_file(log_path.string(),
                  serialize_log_records(log.records, csv ? LogFormat::Csv : LogFormat::JsonLines));
  out << log_path.string() << '\n';
  return kOk;
}

int cmd_stats(const Options& o, std::ostream& out, std::ostream&) {
  auto protocol = read_protocol(o);
  auto log = read_log(o, protocol);
  std::ostringstream csv;
  csv << "Vehicle,expected,executed,judged,completion\n";
  for (const auto& s : completion_stats(log)) {
    csv << vehicle_label(s.vehicle) << ',' << s.expected << ',' << s.executed << ',' << s.judged
        << ',' << s.completion_percent << "%\n";
  }
  out << csv.str();
  if (!o.out.empty()) write_output(o.out, "completion", ReportFormat::Csv, csv.str());
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Scenario-based AEB assessment: validate, score, compare and simulate campaigns",
               "aebscore"};
  app.require_subcommand(1);
  Options o;

  auto add_protocol = [&](CLI::App* sub) {
    sub->add_option("--protocol", o.protocol, "Protocol JSON file")->required();
  };
  auto add_log = [&](CLI::App* sub) {
    sub->add_option("--log", o.log, "Campaign log (JSON-lines or CSV)")->required();
    sub->add_option("--vehicles", o.vehicles, "Vehicle profiles JSON (masses)");
    sub->add_flag("--continue-on-impact", o.continue_on_impact,
                  "Escalation stops only when the AEB gives no response");
  };
  auto add_scoring = [&](CLI::App* sub) {
    sub->add_option("--weights", o.weights, "Regional weight table (repeatable)");
    sub->add_option("--out", o.out, "Output directory")->required();
    sub->add_option("--format", o.formats, "csv, markdown, html (repeatable)")->delimiter(',');
    sub->add_option("--impact-model", o.impact_model, "Impact model JSON section");
    sub->add_option("--na-policy", o.na_policy, "exclude (default) or zero")
        ->check(CLI::IsMember({"exclude", "zero"}));
  };

  auto* validate = app.add_subcommand("validate", "Check a campaign log against the procedure");
  add_protocol(validate);
  add_log(validate);

  auto* score = app.add_subcommand("score", "Scenario-level FS/MPS tables");
  add_protocol(score);
  add_log(score);
  add_scoring(score);

  auto* compare = app.add_subcommand("compare", "Relative performance matrices");
  add_protocol(compare);
  add_log(compare);
  add_scoring(compare);

  auto* simulate = app.add_subcommand("simulate", "Replay the procedure against braking oracles");
  add_protocol(simulate);
  simulate->add_option("--oracle", o.oracle, "Oracle spec JSON")->required();
  simulate->add_option("--seed", o.seed, "Random seed (overrides the spec)");
  simulate->add_option("--out", o.out, "Output directory")->required();
  simulate->add_option("--log-format", o.log_format, "jsonl (default) or csv")
      ->check(CLI::IsMember({"jsonl", "csv"}));

  auto* stats = app.add_subcommand("stats", "Expected vs executed tests per vehicle");
  add_protocol(stats);
  add_log(stats);
  stats->add_option("--out", o.out, "Also write completion.csv here");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kInputError;
  }

  try {
    if (*validate) return cmd_validate(o, out, err);
    if (*score) return cmd_score(o, out, err);
    if (*compare) return cmd_compare(o, out, err);
    if (*simulate) return cmd_simulate(o, out, err);
    if (*stats) return cmd_stats(o, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}

}  // namespace aeb::cli
