#pragma once

#include "json.hpp"
#include "visurvey/result_store.hpp"
#include "visurvey/schedule.hpp"
#include "visurvey/study.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace visurvey {

struct Enrollment {
  std::string participant_id;
  Timestamp enrolled_at;

  bool operator==(const Enrollment&) const = default;
};

/// Everything needed to run a study for a set of participants: the study
/// definitions, when each task recurs, reminder policy and enrollments.
/// Kept in its own document, separate from the study definitions.
struct Deployment {
  std::vector<StudyDefinition> studies;
  std::vector<ScheduleSpec> schedules;
  ReminderPolicy reminders;
  std::vector<Enrollment> participants;
  Duration session_ttl = kDefaultSessionTtl;
  /// Active item sets older than this are treated as empty. Unset: no limit.
  std::optional<Duration> active_items_max_age;

  const StudyDefinition* study_for_assessment(const std::string& assessment_id) const;
};

/// Document form:
///   {"deploymentVersion": 1,
///    "studies": ["yadl.json"],
///    "schedules": [<schedule>...],
///    "reminders": {"snooze": "30m", "maxSnoozes": 3},
///    "participants": [{"id": "p1", "enrolledAt": "2016-09-01T00:00:00Z"}],
///    "sessionTtl": "24h",
///    "activeItemsMaxAge": "31d"}
/// Study paths resolve against `base_dir`. Every schedule must name the full
/// or spot identifier of a loaded study matching its kind. Throws ParseError
/// (structure) or Error INVALID_STUDY / UNKNOWN_ASSESSMENT / UNSUPPORTED_TASK.
Deployment parse_deployment(const nlohmann::json& doc, const std::filesystem::path& base_dir);
Deployment load_deployment(const std::filesystem::path& file);

struct ClockConfig {
  /// Manual clocks start at `start` and can be moved via the debug route.
  bool manual = false;
  Timestamp start{};
};

struct ServerConfig {
  std::string bind = "127.0.0.1";
  int port = 8080;
  std::filesystem::path deployment;
  SinkConfig sink{MemorySinkConfig{}};
  /// Environment variable holding the static bearer token; empty disables auth.
  std::string auth_token_env;
  std::optional<std::filesystem::path> assets_dir;
  ClockConfig clock;
  int threads = 8;
};

/// {"bind": "127.0.0.1", "port": 8080, "deployment": "deployment.json",
///  "sink": {...}, "authTokenEnv": "VISURVEY_TOKEN", "assets": "assets",
///  "clock": {"mode": "system"} | {"mode": "manual", "start": "..."},
///  "threads": 8}
ServerConfig parse_server_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
ServerConfig load_server_config(const std::filesystem::path& file);

/// Reads a whole file; throws Error UNREADABLE.
std::string read_text_file(const std::filesystem::path& file);
/// Parses JSON text; throws ParseError SYNTAX with line/column.
nlohmann::json parse_json_text(std::string_view text);

}  // namespace visurvey
