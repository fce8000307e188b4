#include "visurvey/deployment.hpp"

#include "visurvey/error.hpp"
#include "visurvey/wire.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace visurvey {

using nlohmann::json;

std::string read_text_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error("UNREADABLE", "cannot read " + file.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

json parse_json_text(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::size_t line = 1, column = 1;
    const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ParseError("SYNTAX", "",
                     "syntax error at line " + std::to_string(line) + ", column " + std::to_string(column), line,
                     column);
  }
}

const StudyDefinition* Deployment::study_for_assessment(const std::string& assessment_id) const {
  for (const auto& study : studies) {
    if (study.find_assessment(assessment_id)) return &study;
  }
  return nullptr;
}

namespace {

const json& need(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError("MISSING_FIELD", append_path(path, key), append_path(path, key) + ": required field is missing");
  }
  return *it;
}

std::string need_string(const json& obj, const char* key, const std::string& path) {
  const json& v = need(obj, key, path);
  if (!v.is_string()) throw ParseError("TYPE_MISMATCH", append_path(path, key), append_path(path, key) + ": expected string");
  return v.get<std::string>();
}

Duration duration_at(const json& obj, const char* key, const std::string& path) {
  try {
    return parse_duration(need_string(obj, key, path));
  } catch (const ParseError& e) {
    if (e.code() != "BAD_DURATION") throw;
    throw ParseError("BAD_DURATION", append_path(path, key), append_path(path, key) + ": " + e.what());
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

}  // namespace

Deployment parse_deployment(const json& doc, const std::filesystem::path& base_dir) {
  const std::string root = "deployment";
  if (!doc.is_object()) throw ParseError("TYPE_MISMATCH", root, "deployment must be an object");
  if (doc.contains("deploymentVersion")) {
    const json& v = doc["deploymentVersion"];
    if (!v.is_number_integer() || v.get<int>() != 1) {
      throw ParseError("UNSUPPORTED_VERSION", append_path(root, "deploymentVersion"), "only deploymentVersion 1 is supported");
    }
  }

  Deployment d;
  const json& studies = need(doc, "studies", root);
  if (!studies.is_array()) throw ParseError("TYPE_MISMATCH", append_path(root, "studies"), "studies must be an array of paths");
  std::set<std::string> study_ids;
  for (std::size_t i = 0; i < studies.size(); ++i) {
    if (!studies[i].is_string()) {
      throw ParseError("TYPE_MISMATCH", append_path(append_path(root, "studies"), i), "study entries must be paths");
    }
    StudyDefinition study = load_study_definition(resolve(base_dir, studies[i].get<std::string>()));
    const ValidationReport report = validate_study(study);
    if (!report.valid()) {
      const Diagnostic& first = *std::find_if(report.diagnostics.begin(), report.diagnostics.end(),
                                              [](const Diagnostic& x) { return x.severity == Severity::error; });
      throw Error("INVALID_STUDY", studies[i].get<std::string>() + ": " + first.code + " at " + first.path + ": " +
                                       first.message);
    }
    if (!study_ids.insert(study.study_id).second) {
      throw Error("INVALID_STUDY", "study '" + study.study_id + "' is loaded twice");
    }
    d.studies.push_back(std::move(study));
  }

  if (doc.contains("schedules")) {
    const json& schedules = doc["schedules"];
    if (!schedules.is_array()) throw ParseError("TYPE_MISMATCH", append_path(root, "schedules"), "schedules must be an array");
    for (std::size_t i = 0; i < schedules.size(); ++i) {
      const std::string path = append_path(append_path(root, "schedules"), i);
      ScheduleSpec spec = wire::parse_schedule(schedules[i], path);
      if (spec.task.kind == TaskKind::pam) {
        throw Error("UNSUPPORTED_TASK", path + ": pam tasks cannot be scheduled from a deployment");
      }
      const StudyDefinition* study = d.study_for_assessment(spec.task.assessment_id);
      const AssessmentPair* pair = study ? study->find_assessment(spec.task.assessment_id) : nullptr;
      const std::string& expected = spec.task.kind == TaskKind::full ? (pair ? pair->full.identifier : "")
                                                                      : (pair ? pair->spot.identifier : "");
      if (!pair || expected != spec.task.assessment_id) {
        throw Error("UNKNOWN_ASSESSMENT", path + ": no " + to_string(spec.task.kind) + " assessment '" +
                                              spec.task.assessment_id + "' in the loaded studies");
      }
      d.schedules.push_back(std::move(spec));
    }
  }

  if (doc.contains("reminders")) {
    const json& r = doc["reminders"];
    const std::string path = append_path(root, "reminders");
    if (!r.is_object()) throw ParseError("TYPE_MISMATCH", path, "reminders must be an object");
    if (r.contains("snooze")) d.reminders.snooze_duration = duration_at(r, "snooze", path);
    if (r.contains("maxSnoozes")) {
      if (!r["maxSnoozes"].is_number_integer() || r["maxSnoozes"].get<int>() < 0) {
        throw ParseError("TYPE_MISMATCH", append_path(path, "maxSnoozes"), "maxSnoozes must be a non-negative integer");
      }
      d.reminders.max_snoozes = r["maxSnoozes"].get<int>();
    }
  }

  if (doc.contains("participants")) {
    const json& ps = doc["participants"];
    if (!ps.is_array()) throw ParseError("TYPE_MISMATCH", append_path(root, "participants"), "participants must be an array");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const std::string path = append_path(append_path(root, "participants"), i);
      Enrollment e;
      e.participant_id = need_string(ps[i], "id", path);
      e.enrolled_at = parse_timestamp(need_string(ps[i], "enrolledAt", path));
      if (!seen.insert(e.participant_id).second) {
        throw ParseError("DUP_IDENTIFIER", append_path(path, "id"), "participant '" + e.participant_id + "' listed twice");
      }
      d.participants.push_back(std::move(e));
    }
  }

  if (doc.contains("sessionTtl")) d.session_ttl = duration_at(doc, "sessionTtl", root);
  if (doc.contains("activeItemsMaxAge")) d.active_items_max_age = duration_at(doc, "activeItemsMaxAge", root);
  return d;
}

Deployment load_deployment(const std::filesystem::path& file) {
  return parse_deployment(parse_json_text(read_text_file(file)), file.parent_path());
}

ServerConfig parse_server_config(const json& doc, const std::filesystem::path& base_dir) {
  const std::string root = "config";
  if (!doc.is_object()) throw ParseError("TYPE_MISMATCH", root, "server config must be an object");
  ServerConfig c;
  if (doc.contains("bind")) c.bind = need_string(doc, "bind", root);
  if (doc.contains("port")) {
    if (!doc["port"].is_number_integer()) throw ParseError("TYPE_MISMATCH", "config.port", "port must be an integer");
    c.port = doc["port"].get<int>();
  }
  c.deployment = resolve(base_dir, need_string(doc, "deployment", root));
  if (doc.contains("sink")) c.sink = parse_sink_config(doc["sink"], base_dir);
  if (doc.contains("authTokenEnv")) c.auth_token_env = need_string(doc, "authTokenEnv", root);
  if (doc.contains("assets")) c.assets_dir = resolve(base_dir, need_string(doc, "assets", root));
  if (doc.contains("threads")) {
    if (!doc["threads"].is_number_integer() || doc["threads"].get<int>() < 1) {
      throw ParseError("TYPE_MISMATCH", "config.threads", "threads must be a positive integer");
    }
    c.threads = doc["threads"].get<int>();
  }
  if (doc.contains("clock")) {
    const json& clock = doc["clock"];
    const std::string mode = need_string(clock, "mode", "config.clock");
    if (mode == "manual") {
      c.clock.manual = true;
      c.clock.start = parse_timestamp(need_string(clock, "start", "config.clock"));
    } else if (mode != "system") {
      throw ParseError("TYPE_MISMATCH", "config.clock.mode", "clock mode must be 'system' or 'manual'");
    }
  }
  return c;
}

ServerConfig load_server_config(const std::filesystem::path& file) {
  return parse_server_config(parse_json_text(read_text_file(file)), file.parent_path());
}

}  // namespace visurvey
