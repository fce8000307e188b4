#pragma once

#include "visurvey/plan.hpp"
#include "visurvey/time.hpp"

#include <chrono>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace visurvey {

struct TaskRef {
  /// Full or spot identifier of an assessment pair.
  std::string assessment_id;
  TaskKind kind = TaskKind::full;

  auto operator<=>(const TaskRef&) const = default;
};

struct Daily {
  bool operator==(const Daily&) const = default;
};

struct Weekly {
  std::chrono::weekday weekday;
  bool operator==(const Weekly&) const = default;
};

/// Day of month is restricted to 1..28 so every month has it.
struct Monthly {
  unsigned day_of_month = 1;
  bool operator==(const Monthly&) const = default;
};

/// Fixed absolute interval, anchored at `start_date`'s local anchor time.
struct Every {
  Duration interval{0};
  bool operator==(const Every&) const = default;
};

using Recurrence = std::variant<Daily, Weekly, Monthly, Every>;

struct LocalTimeOfDay {
  unsigned hour = 0;
  unsigned minute = 0;

  auto operator<=>(const LocalTimeOfDay&) const = default;
};

inline constexpr Duration kDefaultWindow = std::chrono::hours{24};

struct ScheduleSpec {
  TaskRef task;
  Recurrence recurrence = Daily{};
  LocalTimeOfDay anchor_time;
  /// IANA zone name.
  std::string timezone = "UTC";
  /// How long a due occurrence stays open.
  Duration window = kDefaultWindow;
  /// First local date of an `Every` series.
  std::chrono::year_month_day start_date{std::chrono::year{1970}, std::chrono::January, std::chrono::day{1}};

  bool operator==(const ScheduleSpec&) const = default;
};

/// Throws ScheduleError BAD_INTERVAL, BAD_DAY_OF_MONTH, BAD_WINDOW,
/// BAD_ANCHOR_TIME or BAD_TIMEZONE.
void validate_schedule(const ScheduleSpec& spec);

/// Earliest recurrence instant strictly after `after`. Local times skipped
/// by a DST change roll forward to the first valid instant; repeated local
/// times resolve to their first occurrence. Throws ScheduleError
/// BAD_TIMEZONE (and the validate_schedule errors).
Timestamp next_occurrence(const ScheduleSpec& spec, Timestamp after);

struct ReminderPolicy {
  Duration snooze_duration = std::chrono::minutes{30};
  int max_snoozes = 3;

  bool operator==(const ReminderPolicy&) const = default;
};

enum class OccurrenceState { pending, snoozed, completed, expired };

const char* to_string(OccurrenceState state);

struct Occurrence {
  std::string occurrence_id;
  std::string participant_id;
  TaskRef task;
  Timestamp due_at;
  Timestamp expires_at;
  /// When the participant should next be prompted; due_at until snoozed.
  Timestamp remind_at;
  int snooze_count = 0;
  OccurrenceState state = OccurrenceState::pending;
  /// Session currently running or (once completed) that completed it.
  std::optional<std::string> session_id;

  bool operator==(const Occurrence&) const = default;
};

/// Stable id derived from participant, task and due instant; URL-safe.
std::string make_occurrence_id(const std::string& participant_id, const TaskRef& task, Timestamp due_at);

/// Occurrence bookkeeping for one enrolled participant.
struct ParticipantSchedule {
  std::string participant_id;
  Timestamp enrolled_at;
  std::map<std::string, Occurrence> occurrences;
};

/// Occurrences with due_at <= now < expires_at that are not completed,
/// ordered by (due_at, task). Materializes newly due occurrences into
/// `state` and transitions lapsed ones to expired.
std::vector<Occurrence> due_occurrences(std::span<const ScheduleSpec> specs, ParticipantSchedule& state,
                                        Timestamp now);

/// Pushes the reminder to min(now + snooze, expires_at). Throws
/// ScheduleError EXPIRED, COMPLETED or SNOOZE_LIMIT.
Occurrence apply_snooze(const Occurrence& occ, Timestamp now, const ReminderPolicy& policy);

/// Throws ScheduleError EXPIRED or COMPLETED.
Occurrence complete_occurrence(const Occurrence& occ, const std::string& session_id, Timestamp now);

std::string format_weekday(std::chrono::weekday wd);
/// "monday".."sunday". Throws ParseError BAD_WEEKDAY.
std::chrono::weekday parse_weekday(std::string_view text);
/// "HH:MM". Throws ParseError BAD_ANCHOR_TIME.
LocalTimeOfDay parse_time_of_day(std::string_view text);
std::string format_time_of_day(LocalTimeOfDay t);

}  // namespace visurvey
