#pragma once

#include "visurvey/ids.hpp"
#include "visurvey/plan.hpp"
#include "visurvey/time.hpp"

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace visurvey {

/// Confirms a summary step.
struct Acknowledge {
  bool operator==(const Acknowledge&) const = default;
};

/// Value of one of a choice step's choices.
struct ChoiceAnswer {
  std::string value;
  bool operator==(const ChoiceAnswer&) const = default;
};

/// Selection on a multi-select grid, stored in grid order. May be empty.
struct ItemSetAnswer {
  std::vector<std::string> item_ids;
  bool operator==(const ItemSetAnswer&) const = default;
};

/// Selection on a single-select (PAM) grid.
struct ItemAnswer {
  std::string item_id;
  bool operator==(const ItemAnswer&) const = default;
};

using Answer = std::variant<Acknowledge, ChoiceAnswer, ItemSetAnswer, ItemAnswer>;

struct StepResult {
  std::string step_id;
  Answer answer;
  Timestamp presented_at;
  Timestamp answered_at;

  bool operator==(const StepResult&) const = default;
};

/// Immutable record of a completed session; the unit handed to result sinks.
struct ResultEnvelope {
  std::string envelope_id;
  std::string session_id;
  std::string participant_id;
  std::string study_id;
  TaskKind task_kind = TaskKind::full;
  /// Identifier of the assessment that produced the plan.
  std::string assessment_id;
  std::vector<StepResult> results;
  std::int64_t schema_version = 1;
  Timestamp completed_at;

  bool operator==(const ResultEnvelope&) const = default;
};

enum class SessionStatus { in_progress, completed, abandoned };

const char* to_string(SessionStatus status);

inline constexpr Duration kDefaultSessionTtl = std::chrono::hours{24};

/// A resumable run of a TaskPlan. Mutations are not synchronized; callers
/// serialize access per session.
class SurveySession {
public:
  /// cursor 0, in progress, first step presented at clock.now().
  static SurveySession start(TaskPlan plan, std::string participant_id, const Clock& clock,
                             IdSource& ids);

  /// Records the answer for the current step (replacing any earlier one) and
  /// advances. Throws SessionError NOT_IN_PROGRESS or ANSWER_MISMATCH.
  void submit_answer(const Answer& answer, const Clock& clock);

  /// Steps back one; the revisited step keeps its answer until overwritten.
  /// Throws SessionError NOT_IN_PROGRESS or AT_FIRST_STEP.
  void go_back(const Clock& clock);

  /// Marks an in-progress session abandoned once it is older than `ttl`.
  /// Returns true if the status changed.
  bool expire_if_stale(Timestamp now, Duration ttl = kDefaultSessionTtl);

  /// Ends an in-progress session without an envelope.
  void abandon(Timestamp now);

  /// One result per non-summary step in step order. Throws SessionError
  /// NOT_COMPLETED.
  ResultEnvelope finalize() const;

  const std::string& session_id() const { return session_id_; }
  const std::string& participant_id() const { return participant_id_; }
  const TaskPlan& plan() const { return plan_; }
  std::size_t cursor() const { return cursor_; }
  SessionStatus status() const { return status_; }
  Timestamp started_at() const { return started_at_; }
  std::optional<Timestamp> ended_at() const { return ended_at_; }
  Timestamp current_presented_at() const { return presented_at_; }
  const std::map<std::string, StepResult>& answers() const { return answers_; }
  /// Null once the cursor is past the last step.
  const Step* current_step() const;

private:
  SurveySession() = default;

  /// Checks the answer against `step` and returns its stored form.
  static Answer normalize(const Step& step, const Answer& answer);

  std::string session_id_;
  std::string participant_id_;
  TaskPlan plan_;
  std::size_t cursor_ = 0;
  std::map<std::string, StepResult> answers_;
  SessionStatus status_ = SessionStatus::in_progress;
  Timestamp started_at_;
  std::optional<Timestamp> ended_at_;
  Timestamp presented_at_;
};

}  // namespace visurvey
