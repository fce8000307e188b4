#include "visurvey/schedule.hpp"

#include "visurvey/error.hpp"
#include "visurvey/ids.hpp"

#include <absl/time/civil_time.h>
#include <absl/time/time.h>

#include <algorithm>
#include <array>
#include <cstdio>

namespace visurvey {

namespace {

absl::TimeZone load_zone(const std::string& name) {
  absl::TimeZone tz;
  if (name.empty() || !absl::LoadTimeZone(name, &tz)) {
    throw ScheduleError("BAD_TIMEZONE", "unknown time zone '" + name + "'");
  }
  return tz;
}

Timestamp to_timestamp(absl::Time t) {
  return Timestamp{Duration{absl::ToUnixSeconds(t)}};
}

absl::Time to_absl(Timestamp t) { return absl::FromUnixSeconds(t.time_since_epoch().count()); }

/// The instant of `day` at the anchor time in `tz`.
absl::Time local_instant(const absl::TimeZone& tz, absl::CivilDay day, LocalTimeOfDay at) {
  const absl::TimeZone::TimeInfo info =
      tz.At(absl::CivilSecond(day.year(), day.month(), day.day(), at.hour, at.minute, 0));
  switch (info.kind) {
    case absl::TimeZone::TimeInfo::SKIPPED: return info.trans;
    case absl::TimeZone::TimeInfo::UNIQUE:
    case absl::TimeZone::TimeInfo::REPEATED: return info.pre;
  }
  return info.pre;
}

unsigned weekday_index(absl::Weekday wd) {
  switch (wd) {
    case absl::Weekday::sunday: return 0;
    case absl::Weekday::monday: return 1;
    case absl::Weekday::tuesday: return 2;
    case absl::Weekday::wednesday: return 3;
    case absl::Weekday::thursday: return 4;
    case absl::Weekday::friday: return 5;
    case absl::Weekday::saturday: return 6;
  }
  return 0;
}

constexpr std::array<const char*, 7> kWeekdayNames = {"sunday",   "monday", "tuesday", "wednesday",
                                                      "thursday", "friday", "saturday"};

}  // namespace

void validate_schedule(const ScheduleSpec& spec) {
  if (spec.anchor_time.hour > 23 || spec.anchor_time.minute > 59) {
    throw ScheduleError("BAD_ANCHOR_TIME", "anchor time out of range");
  }
  if (spec.window <= Duration::zero()) throw ScheduleError("BAD_WINDOW", "window must be positive");
  if (const auto* every = std::get_if<Every>(&spec.recurrence); every && every->interval <= Duration::zero()) {
    throw ScheduleError("BAD_INTERVAL", "interval must be positive");
  }
  if (const auto* monthly = std::get_if<Monthly>(&spec.recurrence);
      monthly && (monthly->day_of_month < 1 || monthly->day_of_month > 28)) {
    throw ScheduleError("BAD_DAY_OF_MONTH", "day of month must be within 1..28, got " +
                                                std::to_string(monthly->day_of_month));
  }
  if (const auto* weekly = std::get_if<Weekly>(&spec.recurrence); weekly && !weekly->weekday.ok()) {
    throw ScheduleError("BAD_WEEKDAY", "invalid weekday");
  }
  if (!spec.start_date.ok()) throw ScheduleError("BAD_START_DATE", "invalid start date");
  load_zone(spec.timezone);
}

Timestamp next_occurrence(const ScheduleSpec& spec, Timestamp after) {
  validate_schedule(spec);
  const absl::TimeZone tz = load_zone(spec.timezone);
  const absl::Time after_t = to_absl(after);
  const absl::CivilDay today = absl::ToCivilDay(after_t, tz);

  if (const auto* every = std::get_if<Every>(&spec.recurrence)) {
    const absl::CivilDay first(static_cast<int>(spec.start_date.year()),
                               static_cast<unsigned>(spec.start_date.month()),
                               static_cast<unsigned>(spec.start_date.day()));
    const Timestamp anchor = to_timestamp(local_instant(tz, first, spec.anchor_time));
    if (after < anchor) return anchor;
    const auto steps = (after - anchor) / every->interval + 1;
    return anchor + steps * every->interval;
  }

  if (const auto* monthly = std::get_if<Monthly>(&spec.recurrence)) {
    absl::CivilMonth month = absl::CivilMonth(today) - 1;
    for (int i = 0; i < 4; ++i, ++month) {
      const absl::CivilDay day(month.year(), month.month(), static_cast<int>(monthly->day_of_month));
      const absl::Time t = local_instant(tz, day, spec.anchor_time);
      if (t > after_t) return to_timestamp(t);
    }
  } else {
    // Daily and weekly: scan forward from the day before `after`'s local day.
    std::optional<unsigned> weekday;
    if (const auto* weekly = std::get_if<Weekly>(&spec.recurrence)) weekday = weekly->weekday.c_encoding();
    absl::CivilDay day = today - 1;
    for (int i = 0; i < 16; ++i, ++day) {
      if (weekday && weekday_index(absl::GetWeekday(day)) != *weekday) continue;
      const absl::Time t = local_instant(tz, day, spec.anchor_time);
      if (t > after_t) return to_timestamp(t);
    }
  }
  throw ScheduleError("NO_OCCURRENCE", "recurrence produced no instant after " + format_timestamp(after));
}

const char* to_string(OccurrenceState state) {
  switch (state) {
    case OccurrenceState::pending: return "pending";
    case OccurrenceState::snoozed: return "snoozed";
    case OccurrenceState::completed: return "completed";
    case OccurrenceState::expired: return "expired";
  }
  return "pending";
}

std::string make_occurrence_id(const std::string& participant_id, const TaskRef& task, Timestamp due_at) {
  const absl::CivilSecond cs = absl::ToCivilSecond(to_absl(due_at), absl::UTCTimeZone());
  char stamp[32];
  std::snprintf(stamp, sizeof stamp, "%04lld%02d%02dT%02d%02d%02dZ", static_cast<long long>(cs.year()),
                cs.month(), cs.day(), cs.hour(), cs.minute(), cs.second());
  const std::string digest = hex64(fnv1a64(participant_id + '\n' + task.assessment_id + '\n' + to_string(task.kind)));
  return std::string(to_string(task.kind)) + "-" + stamp + "-" + digest.substr(0, 12);
}

std::vector<Occurrence> due_occurrences(std::span<const ScheduleSpec> specs, ParticipantSchedule& state,
                                        Timestamp now) {
  for (const ScheduleSpec& spec : specs) {
    // Anything due at or before now - window has already lapsed.
    Timestamp cursor = std::max(state.enrolled_at - Duration{1}, now - spec.window);
    for (Timestamp due = next_occurrence(spec, cursor); due <= now; due = next_occurrence(spec, due)) {
      std::string id = make_occurrence_id(state.participant_id, spec.task, due);
      if (state.occurrences.count(id)) continue;
      Occurrence occ;
      occ.occurrence_id = id;
      occ.participant_id = state.participant_id;
      occ.task = spec.task;
      occ.due_at = due;
      occ.expires_at = due + spec.window;
      occ.remind_at = due;
      state.occurrences.emplace(std::move(id), std::move(occ));
    }
  }

  std::vector<Occurrence> due;
  for (auto& [id, occ] : state.occurrences) {
    const bool open = occ.state == OccurrenceState::pending || occ.state == OccurrenceState::snoozed;
    if (open && now >= occ.expires_at) {
      occ.state = OccurrenceState::expired;
      continue;
    }
    if (open && occ.due_at <= now) due.push_back(occ);
  }
  std::sort(due.begin(), due.end(), [](const Occurrence& a, const Occurrence& b) {
    return std::tie(a.due_at, a.task, a.occurrence_id) < std::tie(b.due_at, b.task, b.occurrence_id);
  });
  return due;
}

Occurrence apply_snooze(const Occurrence& occ, Timestamp now, const ReminderPolicy& policy) {
  if (occ.state == OccurrenceState::completed) {
    throw ScheduleError("COMPLETED", "occurrence " + occ.occurrence_id + " is already completed");
  }
  if (occ.state == OccurrenceState::expired || now >= occ.expires_at) {
    throw ScheduleError("EXPIRED", "occurrence " + occ.occurrence_id + " has expired");
  }
  if (occ.snooze_count >= policy.max_snoozes) {
    throw ScheduleError("SNOOZE_LIMIT", "occurrence " + occ.occurrence_id + " reached the limit of " +
                                            std::to_string(policy.max_snoozes) + " snoozes");
  }
  Occurrence out = occ;
  out.remind_at = std::min(now + policy.snooze_duration, occ.expires_at);
  ++out.snooze_count;
  out.state = OccurrenceState::snoozed;
  return out;
}

Occurrence complete_occurrence(const Occurrence& occ, const std::string& session_id, Timestamp now) {
  if (occ.state == OccurrenceState::completed) {
    throw ScheduleError("COMPLETED", "occurrence " + occ.occurrence_id + " is already completed");
  }
  if (occ.state == OccurrenceState::expired || now >= occ.expires_at) {
    throw ScheduleError("EXPIRED", "occurrence " + occ.occurrence_id + " has expired");
  }
  Occurrence out = occ;
  out.state = OccurrenceState::completed;
  out.session_id = session_id;
  return out;
}

std::string format_weekday(std::chrono::weekday wd) { return kWeekdayNames[wd.c_encoding() % 7]; }

std::chrono::weekday parse_weekday(std::string_view text) {
  for (unsigned i = 0; i < kWeekdayNames.size(); ++i) {
    if (text == kWeekdayNames[i]) return std::chrono::weekday{i};
  }
  throw ParseError("BAD_WEEKDAY", "", "unknown weekday '" + std::string(text) + "'");
}

LocalTimeOfDay parse_time_of_day(std::string_view text) {
  unsigned h = 0, m = 0;
  const auto digit = [](char c) { return c >= '0' && c <= '9'; };
  if (text.size() != 5 || text[2] != ':' || !digit(text[0]) || !digit(text[1]) || !digit(text[3]) ||
      !digit(text[4])) {
    throw ParseError("BAD_ANCHOR_TIME", "", "expected HH:MM, got '" + std::string(text) + "'");
  }
  h = static_cast<unsigned>((text[0] - '0') * 10 + (text[1] - '0'));
  m = static_cast<unsigned>((text[3] - '0') * 10 + (text[4] - '0'));
  if (h > 23 || m > 59) throw ParseError("BAD_ANCHOR_TIME", "", "time of day out of range: " + std::string(text));
  return {h, m};
}

std::string format_time_of_day(LocalTimeOfDay t) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02u:%02u", t.hour, t.minute);
  return buf;
}

}  // namespace visurvey
