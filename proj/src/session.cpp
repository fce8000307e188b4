#include "visurvey/session.hpp"

#include "visurvey/error.hpp"

#include <algorithm>
#include <set>

namespace visurvey {

const char* to_string(SessionStatus status) {
  switch (status) {
    case SessionStatus::in_progress: return "in_progress";
    case SessionStatus::completed: return "completed";
    case SessionStatus::abandoned: return "abandoned";
  }
  return "in_progress";
}

SurveySession SurveySession::start(TaskPlan plan, std::string participant_id, const Clock& clock,
                                   IdSource& ids) {
  SurveySession s;
  s.session_id_ = ids.next("s");
  s.participant_id_ = std::move(participant_id);
  s.plan_ = std::move(plan);
  s.started_at_ = clock.now();
  s.presented_at_ = s.started_at_;
  return s;
}

const Step* SurveySession::current_step() const {
  return cursor_ < plan_.steps.size() ? &plan_.steps[cursor_] : nullptr;
}

namespace {

[[noreturn]] void mismatch(const Step& step, const std::string& why) {
  throw SessionError("ANSWER_MISMATCH", "step '" + step.step_id + "': " + why);
}

}  // namespace

Answer SurveySession::normalize(const Step& step, const Answer& answer) {
  if (const auto* choice_step = std::get_if<SingleChoiceImageStep>(&step.content)) {
    const auto* choice = std::get_if<ChoiceAnswer>(&answer);
    if (!choice) mismatch(step, "expects a choice value");
    const bool known = std::any_of(choice_step->choices.begin(), choice_step->choices.end(),
                                   [&](const ChoiceDef& c) { return c.value == choice->value; });
    if (!known) mismatch(step, "'" + choice->value + "' is not one of the step's choice values");
    return answer;
  }

  if (const auto* grid = std::get_if<ImageGridStep>(&step.content)) {
    std::vector<std::string> picked;
    if (const auto* one = std::get_if<ItemAnswer>(&answer)) {
      picked.push_back(one->item_id);
    } else if (const auto* many = std::get_if<ItemSetAnswer>(&answer)) {
      picked = many->item_ids;
    } else {
      mismatch(step, "expects an item selection");
    }
    std::set<std::string> unique;
    for (const std::string& id : picked) {
      if (!grid->contains(id)) mismatch(step, "item '" + id + "' is not in the grid");
      if (!unique.insert(id).second) mismatch(step, "item '" + id + "' selected twice");
    }
    if (grid->selection == SelectionMode::single) {
      if (picked.size() != 1) {
        mismatch(step, "single-select grid needs exactly one item, got " + std::to_string(picked.size()));
      }
      return ItemAnswer{picked.front()};
    }
    ItemSetAnswer ordered;
    for (const ItemDef& item : grid->items) {
      if (unique.count(item.identifier)) ordered.item_ids.push_back(item.identifier);
    }
    return ordered;
  }

  if (!std::holds_alternative<Acknowledge>(answer)) mismatch(step, "summary steps take an acknowledgement");
  return answer;
}

void SurveySession::submit_answer(const Answer& answer, const Clock& clock) {
  if (status_ != SessionStatus::in_progress) {
    throw SessionError("NOT_IN_PROGRESS", "session " + session_id_ + " is " + to_string(status_));
  }
  const Step* step = current_step();
  if (!step) throw SessionError("NOT_IN_PROGRESS", "session " + session_id_ + " has no current step");

  Answer stored = normalize(*step, answer);
  const Timestamp now = std::max(clock.now(), presented_at_);
  answers_.insert_or_assign(step->step_id, StepResult{step->step_id, std::move(stored), presented_at_, now});
  ++cursor_;
  presented_at_ = now;

  if (cursor_ == plan_.steps.size()) {
    const bool all_answered = std::all_of(plan_.steps.begin(), plan_.steps.end(), [&](const Step& s) {
      return answers_.count(s.step_id) != 0;
    });
    if (all_answered) {
      status_ = SessionStatus::completed;
      ended_at_ = now;
    }
  }
}

void SurveySession::go_back(const Clock& clock) {
  if (status_ != SessionStatus::in_progress) {
    throw SessionError("NOT_IN_PROGRESS", "session " + session_id_ + " is " + to_string(status_));
  }
  if (cursor_ == 0) throw SessionError("AT_FIRST_STEP", "session " + session_id_ + " is at its first step");
  --cursor_;
  presented_at_ = std::max(clock.now(), presented_at_);
}

bool SurveySession::expire_if_stale(Timestamp now, Duration ttl) {
  if (status_ != SessionStatus::in_progress || now - started_at_ <= ttl) return false;
  status_ = SessionStatus::abandoned;
  ended_at_ = now;
  return true;
}

void SurveySession::abandon(Timestamp now) {
  if (status_ != SessionStatus::in_progress) return;
  status_ = SessionStatus::abandoned;
  ended_at_ = std::max(now, started_at_);
}

ResultEnvelope SurveySession::finalize() const {
  if (status_ != SessionStatus::completed) {
    throw SessionError("NOT_COMPLETED", "session " + session_id_ + " is " + to_string(status_));
  }
  ResultEnvelope env;
  env.envelope_id = "env-" + session_id_;
  env.session_id = session_id_;
  env.participant_id = participant_id_;
  env.study_id = plan_.study_id;
  env.task_kind = plan_.task_kind;
  env.assessment_id = plan_.assessment_id;
  env.completed_at = *ended_at_;
  for (const Step& step : plan_.steps) {
    if (step.is_summary()) continue;
    env.results.push_back(answers_.at(step.step_id));
  }
  return env;
}

}  // namespace visurvey
