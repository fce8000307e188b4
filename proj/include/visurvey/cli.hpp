#pragma once

#include "json.hpp"
#include "visurvey/session.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace visurvey {

/// One scripted action against a session.
struct ScriptEntry {
  /// Step the entry targets: a full step id, or the bare item identifier.
  std::optional<std::string> step;
  std::optional<std::size_t> index;
  bool back = false;
  /// Shorthand or typed answer; null for `back` entries.
  nlohmann::json answer;
};

/// Headless answers for the full and spot halves of a pair.
struct AnswerScript {
  std::string participant_id = "participant-1";
  std::vector<ScriptEntry> full;
  std::vector<ScriptEntry> spot;
};

/// {"participantId": "p1", "full": [entry...], "spot": [entry...]}
/// entry: "hard" | ["Bathing"] | {"type": "choice", ...}
///      | {"step": "Bathing", "answer": "hard"} | {"index": 2, "answer": ...}
///      | {"back": true}
/// A bare array is taken as the full-assessment entries.
AnswerScript parse_answer_script(const nlohmann::json& doc);

/// Converts a shorthand answer for `step`: strings are choice values (or the
/// item of a single-select grid), arrays are grid selections, "ack" or null
/// acknowledges a summary, objects use the typed wire form.
Answer script_answer(const Step& step, const nlohmann::json& value);

/// Applies the entries in order, then (when `auto_ack`) acknowledges any
/// trailing summary steps. Throws SessionError ANSWER_MISMATCH naming the
/// step when an entry does not fit.
void replay_script(SurveySession& session, const std::vector<ScriptEntry>& entries, ManualClock& clock,
                   bool auto_ack = true);

/// Entry point of the `visurvey` tool. Exit codes: 0 success, 1 validation
/// or semantic failure, 2 I/O or usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace visurvey
