#pragma once

#include "json.hpp"
#include "visurvey/plan.hpp"
#include "visurvey/schedule.hpp"
#include "visurvey/session.hpp"
#include "visurvey/study.hpp"

#include <string>
#include <string_view>

// JSON forms shared by the result files, the HTTP API, the CLI and the
// Python bindings. Key order is fixed (ordered_json) so the text output of
// dump() is byte-stable.
namespace visurvey::wire {

using nlohmann::ordered_json;

ordered_json item_json(const ItemDef& item);
ordered_json choice_json(const ChoiceDef& choice);
ordered_json summary_json(const SummaryDef& summary);
ordered_json options_json(const SpotOptionsDef& options);

/// Self-contained step payload: everything a client needs to render it.
ordered_json step_json(const Step& step, std::size_t index, std::size_t count);
ordered_json plan_json(const TaskPlan& plan);

/// {"type":"ack"} | {"type":"choice","value":..} | {"type":"items","items":[..]}
/// | {"type":"item","item":..}
ordered_json answer_json(const Answer& answer);
/// Accepts the typed form above. Throws ParseError TYPE_MISMATCH.
Answer parse_answer(const nlohmann::json& value);

ordered_json step_result_json(const StepResult& result);
StepResult parse_step_result(const nlohmann::json& value);

ordered_json envelope_json(const ResultEnvelope& envelope);
ResultEnvelope parse_envelope(const nlohmann::json& value);

/// One canonical record line (no trailing newline). This is both the
/// result-file line format and the HTTP sink POST body.
std::string envelope_record(const ResultEnvelope& envelope);
/// Throws ParseError SYNTAX / TYPE_MISMATCH / MISSING_FIELD.
ResultEnvelope parse_envelope_record(std::string_view line);

ordered_json active_items_json(const ActiveItemSet& active);
/// Accepts the object form or a bare array of item ids.
ActiveItemSet parse_active_items(const nlohmann::json& value);

ordered_json task_ref_json(const TaskRef& ref);
ordered_json occurrence_json(const Occurrence& occ);
ordered_json schedule_json(const ScheduleSpec& spec);
/// Throws ParseError (with path) or ScheduleError for semantic problems.
ScheduleSpec parse_schedule(const nlohmann::json& value, const std::string& path = "schedule");

ordered_json session_json(const SurveySession& session);

ordered_json report_json(const ValidationReport& report);

}  // namespace visurvey::wire
