#include "visurvey/cli.hpp"

#include "CLI11.hpp"
#include "visurvey/deployment.hpp"
#include "visurvey/error.hpp"
#include "visurvey/result_store.hpp"
#include "visurvey/service.hpp"
#include "visurvey/study.hpp"
#include "visurvey/wire.hpp"

#include <algorithm>
#include <csignal>
#include <cstdlib>
#include <iostream>
#include <set>

namespace visurvey {

namespace {

using nlohmann::json;

constexpr int kOk = 0;
constexpr int kSemantic = 1;
constexpr int kUsage = 2;

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

ScriptEntry parse_entry(const json& value, const std::string& path) {
  ScriptEntry entry;
  if (!value.is_object() || value.contains("type")) {
    entry.answer = value;
    return entry;
  }
  for (const auto& [key, v] : value.items()) {
    if (key == "back") {
      if (!v.is_boolean() || !v.get<bool>()) throw ParseError("TYPE_MISMATCH", append_path(path, key), "back must be true");
      entry.back = true;
    } else if (key == "step" || key == "stepId") {
      if (!v.is_string()) throw ParseError("TYPE_MISMATCH", append_path(path, key), "step must be a string");
      entry.step = v.get<std::string>();
    } else if (key == "index") {
      if (!v.is_number_unsigned()) throw ParseError("TYPE_MISMATCH", append_path(path, key), "index must be a non-negative integer");
      entry.index = v.get<std::size_t>();
    } else if (key == "answer") {
      entry.answer = v;
    } else {
      throw ParseError("UNKNOWN_FIELD", append_path(path, key), "unknown script field '" + key + "'");
    }
  }
  if (entry.back && (entry.step || entry.index || !entry.answer.is_null())) {
    throw ParseError("CONFLICTING_FIELDS", path, "a back entry takes no step, index or answer");
  }
  return entry;
}

std::vector<ScriptEntry> parse_entries(const json& value, const std::string& path) {
  if (!value.is_array()) throw ParseError("TYPE_MISMATCH", path, "expected an array of script entries");
  std::vector<ScriptEntry> out;
  for (std::size_t i = 0; i < value.size(); ++i) out.push_back(parse_entry(value[i], append_path(path, i)));
  return out;
}

[[noreturn]] void mismatch(const Step& step, const std::string& message) {
  throw SessionError("ANSWER_MISMATCH", "step '" + step.step_id + "': " + message);
}

bool targets(const Step& step, const std::string& ref) {
  if (step.step_id == ref) return true;
  return step.step_id.size() > ref.size() && step.step_id.ends_with(ref) &&
         step.step_id[step.step_id.size() - ref.size() - 1] == '.';
}

}  // namespace

AnswerScript parse_answer_script(const json& doc) {
  AnswerScript script;
  if (doc.is_array()) {
    script.full = parse_entries(doc, "script");
    return script;
  }
  if (!doc.is_object()) throw ParseError("TYPE_MISMATCH", "script", "script must be an object or an array");
  for (const auto& [key, v] : doc.items()) {
    const std::string path = append_path("script", key);
    if (key == "participantId") {
      if (!v.is_string() || v.get<std::string>().empty()) throw ParseError("TYPE_MISMATCH", path, "participantId must be a non-empty string");
      script.participant_id = v.get<std::string>();
    } else if (key == "full") {
      script.full = parse_entries(v, path);
    } else if (key == "spot") {
      script.spot = parse_entries(v, path);
    } else {
      throw ParseError("UNKNOWN_FIELD", path, "unknown script field '" + key + "'");
    }
  }
  return script;
}

Answer script_answer(const Step& step, const json& value) {
  if (value.is_object()) {
    try {
      return wire::parse_answer(value);
    } catch (const Error& e) {
      mismatch(step, e.what());
    }
  }
  if (step.is_summary()) {
    if (value.is_null() || (value.is_string() && value.get<std::string>() == "ack")) return Acknowledge{};
    mismatch(step, "a summary step only takes \"ack\"");
  }
  if (value.is_null()) mismatch(step, "no answer given");
  if (const auto* choice = std::get_if<SingleChoiceImageStep>(&step.content)) {
    (void)choice;
    if (!value.is_string()) mismatch(step, "a choice step takes a choice value string");
    return ChoiceAnswer{value.get<std::string>()};
  }
  const auto& grid = std::get<ImageGridStep>(step.content);
  std::vector<std::string> ids;
  if (value.is_string()) {
    ids.push_back(value.get<std::string>());
  } else if (value.is_array()) {
    for (const auto& v : value) {
      if (!v.is_string()) mismatch(step, "grid selections are arrays of item identifiers");
      ids.push_back(v.get<std::string>());
    }
  } else {
    mismatch(step, "a grid step takes an item identifier or an array of them");
  }
  if (grid.selection == SelectionMode::single) {
    if (ids.size() != 1) mismatch(step, "a single-select grid takes exactly one item");
    return ItemAnswer{ids.front()};
  }
  return ItemSetAnswer{std::move(ids)};
}

void replay_script(SurveySession& session, const std::vector<ScriptEntry>& entries, ManualClock& clock,
                   bool auto_ack) {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const ScriptEntry& entry = entries[i];
    const std::string where = "script entry " + std::to_string(i);
    clock.advance(std::chrono::seconds{1});
    if (session.status() != SessionStatus::in_progress) {
      throw SessionError("ANSWER_MISMATCH", where + ": session already " + to_string(session.status()));
    }
    const Step& step = *session.current_step();
    if (entry.back) {
      try {
        session.go_back(clock);
      } catch (const SessionError& e) {
        throw SessionError(e.code(), where + " at step '" + step.step_id + "': " + e.what());
      }
      continue;
    }
    if (entry.index && *entry.index != session.cursor()) {
      mismatch(step, where + " targets index " + std::to_string(*entry.index) + " but the session is at index " +
                         std::to_string(session.cursor()));
    }
    if (entry.step && !targets(step, *entry.step)) {
      mismatch(step, where + " targets '" + *entry.step + "'");
    }
    session.submit_answer(script_answer(step, entry.answer), clock);
  }
  while (auto_ack && session.status() == SessionStatus::in_progress && session.current_step()->is_summary()) {
    clock.advance(std::chrono::seconds{1});
    session.submit_answer(Acknowledge{}, clock);
  }
  if (session.status() == SessionStatus::in_progress) {
    throw SessionError("SCRIPT_INCOMPLETE", "no scripted answer for step '" + session.current_step()->step_id + "'");
  }
}

namespace {

int exit_code_for(const Error& e) {
  static const std::set<std::string> io_codes = {"UNREADABLE", "NOT_READABLE", "CORRUPT_RECORD", "IO_ERROR",
                                                  "DELIVERY_FAILED", "BIND_FAILED"};
  if (dynamic_cast<const ParseError*>(&e)) return kUsage;
  return io_codes.count(e.code()) ? kUsage : kSemantic;
}

void print_error(std::ostream& err, const std::string& command, const Error& e) {
  err << command << ": ";
  if (const auto* pe = dynamic_cast<const ParseError*>(&e)) {
    if (!pe->path().empty()) err << pe->path();
    if (pe->line() > 0) err << ":" << pe->line() << ":" << pe->column();
    if (!pe->path().empty() || pe->line() > 0) err << ": ";
  }
  err << e.code() << ": " << e.what() << "\n";
}

std::string diagnostic_line(const Diagnostic& d) {
  return std::string(to_string(d.severity)) + " " + d.code + " at " + d.path + ": " + d.message;
}

/// Parses a study file, reporting parse failures with their location.
StudyDefinition load_study(const std::string& file) {
  const std::string text = read_text_file(file);
  try {
    return parse_study_definition(text);
  } catch (const ParseError& e) {
    std::string where = file;
    if (e.line() > 0) where += ":" + std::to_string(e.line()) + ":" + std::to_string(e.column());
    if (!e.path().empty()) where += " (" + e.path() + ")";
    throw ParseError(e.code(), where, e.what());
  }
}

/// Loads and validates; prints errors and returns false when invalid.
bool usable_study(const StudyDefinition& def, std::ostream& err, const std::string& command) {
  const ValidationReport report = validate_study(def);
  if (report.valid()) return true;
  for (const auto& d : report.diagnostics) {
    if (d.severity == Severity::error) err << command << ": " << diagnostic_line(d) << "\n";
  }
  return false;
}

const AssessmentPair& select_pair(const StudyDefinition& def, const std::string& assessment) {
  if (assessment.empty()) {
    if (def.assessments.empty()) throw CompileError("NO_ASSESSMENTS", "study has no assessments");
    return def.assessments.front();
  }
  const AssessmentPair* pair = def.find_assessment(assessment);
  if (!pair) throw CompileError("UNKNOWN_ASSESSMENT", "no assessment '" + assessment + "' in study " + def.study_id);
  return *pair;
}

std::string step_line(const Step& step, std::size_t index) {
  std::string line = std::to_string(index) + "\t";
  if (const auto* choice = std::get_if<SingleChoiceImageStep>(&step.content)) {
    std::vector<std::string> values;
    for (const auto& c : choice->choices) values.push_back(c.value);
    line += "singleChoiceImage\t" + step.step_id + "\titem=" + choice->item.identifier + " choices=" + join(values, ",");
  } else if (const auto* grid = std::get_if<ImageGridStep>(&step.content)) {
    std::vector<std::string> ids;
    for (const auto& item : grid->items) ids.push_back(item.identifier);
    line += "imageGrid\t" + step.step_id + "\tselection=" +
            (grid->selection == SelectionMode::single ? "single" : "multiple") + " items=" + join(ids, ",");
  } else {
    const auto& summary = std::get<SummaryStep>(step.content);
    line += "summary\t" + step.step_id + "\tsummary=" + summary.summary.identifier;
  }
  return line;
}

std::unique_ptr<ResultSink> sink_from_flags(const std::string& out_file, const std::string& sink_config,
                                            const Clock& clock) {
  if (!out_file.empty()) return std::make_unique<FileSink>(FileSinkConfig{out_file, 0}, clock);
  if (!sink_config.empty()) {
    const std::filesystem::path file(sink_config);
    return make_sink(parse_sink_config(parse_json_text(read_text_file(file)), file.parent_path()), clock);
  }
  return std::make_unique<MemorySink>(clock);
}

std::string selection_text(const TaskPlan& plan) {
  for (const auto& step : plan.steps) {
    if (const auto* grid = std::get_if<ImageGridStep>(&step.content)) {
      std::vector<std::string> ids;
      for (const auto& item : grid->items) ids.push_back(item.identifier);
      return "grid: " + join(ids, ", ");
    }
  }
  return "no grid";
}

HttpServer* g_server = nullptr;

extern "C" void stop_server(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Visual self-report survey engine", "visurvey"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "visurvey 0.1.0");

  std::string study_path;
  std::string format;

  CLI::App* validate = app.add_subcommand("validate", "Check a study definition and print its diagnostics");
  std::string assets;
  validate->add_option("study", study_path, "Study definition file")->required();
  validate->add_option("--assets", assets, "Asset directory or JSON array of asset names");
  validate->add_option("--format", format, "Output format")->check(CLI::IsMember({"human", "json"}))->default_val("human");

  CLI::App* plan = app.add_subcommand("plan", "Print the steps compiled for a task");
  std::string task = "full";
  std::string active_file;
  std::string assessment;
  std::string prompt = "How do you feel right now?";
  plan->add_option("study", study_path, "Study definition file")->required();
  plan->add_option("--task", task, "Task to compile: full, spot or pam")->default_val("full");
  plan->add_option("--active", active_file, "Active item set (JSON) for the spot task");
  plan->add_option("--assessment", assessment, "Full or spot identifier of the pair (default: first)");
  plan->add_option("--prompt", prompt, "Grid prompt for the pam task")->default_val(prompt);
  plan->add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "json"}))->default_val("text");

  CLI::App* simulate = app.add_subcommand("simulate", "Run full, derive and spot headlessly from an answer script");
  std::string script_path;
  std::string out_file;
  std::string sink_config;
  std::string participant;
  std::string at;
  std::uint64_t seed = 0;
  simulate->add_option("study", study_path, "Study definition file")->required();
  simulate->add_option("--script", script_path, "Answer script (JSON)")->required();
  auto* out_opt = simulate->add_option("--out", out_file, "Append envelopes to this record file");
  simulate->add_option("--sink-config", sink_config, "Sink configuration (JSON)")->excludes(out_opt);
  simulate->add_option("--assessment", assessment, "Full or spot identifier of the pair (default: first)");
  simulate->add_option("--participant", participant, "Participant id (overrides the script)");
  simulate->add_option("--at", at, "Start time, RFC 3339 (default: now)");
  auto* seed_opt = simulate->add_option("--seed", seed, "Seed for session identifiers");

  CLI::App* serve = app.add_subcommand("serve", "Serve the /v1 API");
  std::string config_path;
  int port = -1;
  serve->add_option("--config", config_path, "Server configuration (JSON)")->required();
  serve->add_option("--port", port, "Override the configured port (0 picks a free one)");

  CLI::App* export_cmd = app.add_subcommand("export", "Print stored envelopes as canonical records");
  std::string in_file;
  std::string study_filter;
  std::string participant_filter;
  std::string from;
  std::string to;
  auto* in_opt = export_cmd->add_option("--in", in_file, "Record file to read");
  export_cmd->add_option("--sink-config", sink_config, "Sink configuration (JSON)")->excludes(in_opt);
  export_cmd->add_option("--study", study_filter, "Only this study");
  export_cmd->add_option("--participant", participant_filter, "Only this participant");
  export_cmd->add_option("--from", from, "Completed at or after (RFC 3339)");
  export_cmd->add_option("--to", to, "Completed before (RFC 3339)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion& e) {
    out << e.what() << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "visurvey: " << e.what() << "\n";
    CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << "Run with --help for usage of '" << (sub == &app ? std::string("visurvey") : sub->get_name()) << "'.\n";
    return kUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();

  try {
    if (command == "validate") {
      std::optional<AssetManifest> manifest;
      if (!assets.empty()) {
        const std::filesystem::path p(assets);
        if (std::filesystem::is_directory(p)) {
          manifest = AssetManifest::from_directory(p);
        } else {
          manifest = AssetManifest::from_json(read_text_file(p));
        }
      }
      StudyDefinition def;
      try {
        def = load_study(study_path);
      } catch (const ParseError& e) {
        if (format == "json") {
          nlohmann::ordered_json doc = nlohmann::ordered_json::object();
          doc["valid"] = false;
          doc["parseError"] = {{"code", e.code()}, {"path", e.path()}, {"message", e.what()}};
          out << doc.dump(2) << "\n";
        }
        print_error(err, command, e);
        return kUsage;
      }
      const ValidationReport report = validate_study(def, manifest ? &*manifest : nullptr);
      if (format == "json") {
        out << wire::report_json(report).dump(2) << "\n";
      } else {
        for (const auto& d : report.diagnostics) out << diagnostic_line(d) << "\n";
        out << study_path << ": " << (report.valid() ? "valid" : "invalid") << ", " << report.error_count()
            << " error(s), " << report.warning_count() << " warning(s)\n";
      }
      return report.valid() ? kOk : kSemantic;
    }

    if (command == "plan") {
      TaskKind kind;
      try {
        kind = parse_task_kind(task);
      } catch (const Error& e) {
        err << "plan: " << e.code() << ": " << e.what() << "\n";
        return kUsage;
      }
      const StudyDefinition def = load_study(study_path);
      if (!usable_study(def, err, command)) return kSemantic;
      TaskPlan compiled;
      if (kind == TaskKind::pam) {
        compiled = compile_pam_task(def.items, prompt);
      } else {
        const AssessmentPair& pair = select_pair(def, assessment);
        if (kind == TaskKind::full) {
          compiled = compile_full_task(pair, def.items, def.study_id);
        } else {
          ActiveItemSet active;
          if (!active_file.empty()) active = wire::parse_active_items(parse_json_text(read_text_file(active_file)));
          compiled = compile_spot_task(pair, active, def.items, def.study_id);
        }
      }
      if (format == "json") {
        out << wire::plan_json(compiled).dump(2) << "\n";
      } else {
        for (std::size_t i = 0; i < compiled.steps.size(); ++i) out << step_line(compiled.steps[i], i) << "\n";
      }
      return kOk;
    }

    if (command == "simulate") {
      const StudyDefinition def = load_study(study_path);
      if (!usable_study(def, err, command)) return kSemantic;
      const AnswerScript script = parse_answer_script(parse_json_text(read_text_file(script_path)));
      const AssessmentPair& pair = select_pair(def, assessment);
      const std::string who = participant.empty() ? script.participant_id : participant;

      ManualClock clock(at.empty() ? SystemClock{}.now() : parse_timestamp(at));
      std::unique_ptr<IdSource> ids = seed_opt->count() ? std::make_unique<RandomIds>(seed) : std::make_unique<RandomIds>();
      std::unique_ptr<ResultSink> sink = sink_from_flags(out_file, sink_config, clock);

      SurveySession full = SurveySession::start(compile_full_task(pair, def.items, def.study_id), who, clock, *ids);
      replay_script(full, script.full, clock);
      const ResultEnvelope full_env = full.finalize();
      sink->append(full_env);
      const ActiveItemSet active = derive_active_items(full_env, pair, def.items);
      out << "full: envelope " << full_env.envelope_id << ", " << full_env.results.size() << " result(s)\n";
      out << "active: " << (active.empty() ? std::string("(none)") : join(active.item_ids, ", ")) << "\n";

      clock.advance(std::chrono::seconds{1});
      const TaskPlan spot_plan = compile_spot_task(pair, active, def.items, def.study_id);
      SurveySession spot = SurveySession::start(spot_plan, who, clock, *ids);
      replay_script(spot, script.spot, clock);
      const ResultEnvelope spot_env = spot.finalize();
      sink->append(spot_env);
      out << "spot: envelope " << spot_env.envelope_id << ", " << spot_env.results.size() << " result(s) ("
          << selection_text(spot_plan) << ")\n";
      return kOk;
    }

    if (command == "serve") {
      ServerConfig config = load_server_config(config_path);
      if (port >= 0) config.port = port;
      const Deployment deployment = load_deployment(config.deployment);
      SystemClock system_clock;
      ManualClock manual_clock(config.clock.start);
      const Clock& clock = config.clock.manual ? static_cast<const Clock&>(manual_clock) : system_clock;
      RandomIds ids;
      ServiceOptions options;
      if (!config.auth_token_env.empty()) {
        const char* token = std::getenv(config.auth_token_env.c_str());
        if (!token || !*token) {
          err << "serve: environment variable " << config.auth_token_env << " is not set\n";
          return kUsage;
        }
        options.bearer_token = token;
      }
      if (config.clock.manual) options.adjustable_clock = &manual_clock;
      ApiService service(deployment, make_sink(config.sink, clock), clock, ids, options);
      HttpServer server(service, config.assets_dir, config.threads);
      const int bound = server.bind(config.bind, config.port);
      if (bound < 0) throw Error("BIND_FAILED", "cannot bind " + config.bind + ":" + std::to_string(config.port));
      out << "listening on http://" << config.bind << ":" << bound << std::endl;
      g_server = &server;
      std::signal(SIGINT, stop_server);
      std::signal(SIGTERM, stop_server);
      server.listen();
      g_server = nullptr;
      return kOk;
    }

    if (command == "export") {
      ExportFilter filter;
      if (!study_filter.empty()) filter.study_id = study_filter;
      if (!participant_filter.empty()) filter.participant_id = participant_filter;
      if (!from.empty()) filter.from = parse_timestamp(from);
      if (!to.empty()) filter.to = parse_timestamp(to);
      SystemClock clock;
      std::unique_ptr<ResultSink> sink;
      if (!in_file.empty()) {
        auto memory = std::make_unique<MemorySink>(clock);
        for (const auto& env : read_record_file(in_file)) memory->append(env);
        sink = std::move(memory);
      } else if (!sink_config.empty()) {
        sink = sink_from_flags("", sink_config, clock);
      } else {
        err << "export: one of --in or --sink-config is required\n";
        return kUsage;
      }
      for (const auto& env : export_results(*sink, filter)) out << wire::envelope_record(env) << "\n";
      return kOk;
    }
  } catch (const Error& e) {
    print_error(err, command, e);
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << command << ": " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace visurvey
