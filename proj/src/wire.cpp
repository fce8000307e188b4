#include "visurvey/wire.hpp"

#include "visurvey/error.hpp"

namespace visurvey::wire {

using nlohmann::json;

namespace {

const json& field(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw ParseError("TYPE_MISMATCH", path, path + ": expected object");
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError("MISSING_FIELD", append_path(path, key), append_path(path, key) + ": required field is missing");
  }
  return *it;
}

std::string string_field(const json& obj, const char* key, const std::string& path) {
  const json& v = field(obj, key, path);
  if (!v.is_string()) {
    throw ParseError("TYPE_MISMATCH", append_path(path, key), append_path(path, key) + ": expected string");
  }
  return v.get<std::string>();
}

std::int64_t integer_field(const json& obj, const char* key, const std::string& path) {
  const json& v = field(obj, key, path);
  if (!v.is_number_integer()) {
    throw ParseError("TYPE_MISMATCH", append_path(path, key), append_path(path, key) + ": expected integer");
  }
  return v.get<std::int64_t>();
}

const json& array_field(const json& obj, const char* key, const std::string& path) {
  const json& v = field(obj, key, path);
  if (!v.is_array()) {
    throw ParseError("TYPE_MISMATCH", append_path(path, key), append_path(path, key) + ": expected array");
  }
  return v;
}

Timestamp timestamp_field(const json& obj, const char* key, const std::string& path) {
  try {
    return parse_timestamp(string_field(obj, key, path));
  } catch (const ParseError& e) {
    if (e.code() != "BAD_TIMESTAMP") throw;
    throw ParseError("BAD_TIMESTAMP", append_path(path, key), append_path(path, key) + ": " + e.what());
  }
}

std::vector<std::string> string_array(const json& arr, const std::string& path) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_string()) {
      throw ParseError("TYPE_MISMATCH", append_path(path, i), append_path(path, i) + ": expected string");
    }
    out.push_back(arr[i].get<std::string>());
  }
  return out;
}

}  // namespace

ordered_json item_json(const ItemDef& item) {
  return {{"identifier", item.identifier}, {"description", item.description}, {"imageTitle", item.image_title}};
}

ordered_json choice_json(const ChoiceDef& choice) {
  return {{"text", choice.text}, {"value", choice.value}, {"color", choice.color.str()}};
}

ordered_json summary_json(const SummaryDef& summary) {
  return {{"identifier", summary.identifier}, {"title", summary.title}, {"text", summary.text}};
}

ordered_json options_json(const SpotOptionsDef& o) {
  ordered_json out = ordered_json::object();
  out["somethingSelectedButtonColor"] = o.something_selected_button_color.str();
  out["nothingSelectedButtonColor"] = o.nothing_selected_button_color.str();
  out["itemCellSelectedColor"] = o.item_cell_selected_color.str();
  out["itemCellSelectedOverlayImageTitle"] = o.item_cell_selected_overlay_image_title;
  out["itemCollectionViewBackgroundColor"] = o.item_collection_view_background_color.str();
  out["itemsPerRow"] = o.items_per_row;
  out["itemMinSpacing"] = o.item_min_spacing;
  return out;
}

ordered_json step_json(const Step& step, std::size_t index, std::size_t count) {
  ordered_json out = ordered_json::object();
  out["stepId"] = step.step_id;
  out["index"] = index;
  out["count"] = count;
  if (const auto* choice = std::get_if<SingleChoiceImageStep>(&step.content)) {
    out["type"] = "singleChoiceImage";
    out["prompt"] = choice->prompt;
    out["item"] = item_json(choice->item);
    ordered_json choices = ordered_json::array();
    for (const auto& c : choice->choices) choices.push_back(choice_json(c));
    out["choices"] = std::move(choices);
  } else if (const auto* grid = std::get_if<ImageGridStep>(&step.content)) {
    out["type"] = "imageGrid";
    out["selection"] = grid->selection == SelectionMode::single ? "single" : "multiple";
    out["prompt"] = grid->prompt;
    ordered_json items = ordered_json::array();
    for (const auto& item : grid->items) items.push_back(item_json(item));
    out["items"] = std::move(items);
    if (grid->options) out["options"] = options_json(*grid->options);
  } else {
    out["type"] = "summary";
    out["summary"] = summary_json(std::get<SummaryStep>(step.content).summary);
  }
  return out;
}

ordered_json plan_json(const TaskPlan& plan) {
  ordered_json out = ordered_json::object();
  out["planId"] = plan.plan_id;
  out["taskKind"] = to_string(plan.task_kind);
  out["studyId"] = plan.study_id;
  out["assessmentId"] = plan.assessment_id;
  ordered_json steps = ordered_json::array();
  for (std::size_t i = 0; i < plan.steps.size(); ++i) steps.push_back(step_json(plan.steps[i], i, plan.steps.size()));
  out["steps"] = std::move(steps);
  return out;
}

ordered_json answer_json(const Answer& answer) {
  return std::visit(
      [](const auto& a) -> ordered_json {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, Acknowledge>) {
          return {{"type", "ack"}};
        } else if constexpr (std::is_same_v<T, ChoiceAnswer>) {
          return {{"type", "choice"}, {"value", a.value}};
        } else if constexpr (std::is_same_v<T, ItemSetAnswer>) {
          return {{"type", "items"}, {"items", a.item_ids}};
        } else {
          return {{"type", "item"}, {"item", a.item_id}};
        }
      },
      answer);
}

Answer parse_answer(const json& value) {
  const std::string path = "answer";
  const std::string type = string_field(value, "type", path);
  if (type == "ack") return Acknowledge{};
  if (type == "choice") return ChoiceAnswer{string_field(value, "value", path)};
  if (type == "items") return ItemSetAnswer{string_array(array_field(value, "items", path), append_path(path, "items"))};
  if (type == "item") return ItemAnswer{string_field(value, "item", path)};
  throw ParseError("TYPE_MISMATCH", append_path(path, "type"), "unknown answer type '" + type + "'");
}

ordered_json step_result_json(const StepResult& result) {
  ordered_json out = ordered_json::object();
  out["stepId"] = result.step_id;
  out["answer"] = answer_json(result.answer);
  out["presentedAt"] = format_timestamp(result.presented_at);
  out["answeredAt"] = format_timestamp(result.answered_at);
  return out;
}

StepResult parse_step_result(const json& value) {
  const std::string path = "result";
  StepResult r;
  r.step_id = string_field(value, "stepId", path);
  r.answer = parse_answer(field(value, "answer", path));
  r.presented_at = timestamp_field(value, "presentedAt", path);
  r.answered_at = timestamp_field(value, "answeredAt", path);
  return r;
}

ordered_json envelope_json(const ResultEnvelope& envelope) {
  ordered_json out = ordered_json::object();
  out["envelopeId"] = envelope.envelope_id;
  out["sessionId"] = envelope.session_id;
  out["participantId"] = envelope.participant_id;
  out["studyId"] = envelope.study_id;
  out["assessmentId"] = envelope.assessment_id;
  out["taskKind"] = to_string(envelope.task_kind);
  out["schemaVersion"] = envelope.schema_version;
  out["completedAt"] = format_timestamp(envelope.completed_at);
  ordered_json results = ordered_json::array();
  for (const auto& r : envelope.results) results.push_back(step_result_json(r));
  out["results"] = std::move(results);
  return out;
}

ResultEnvelope parse_envelope(const json& value) {
  const std::string path = "envelope";
  ResultEnvelope env;
  env.envelope_id = string_field(value, "envelopeId", path);
  env.session_id = string_field(value, "sessionId", path);
  env.participant_id = string_field(value, "participantId", path);
  env.study_id = string_field(value, "studyId", path);
  env.assessment_id = string_field(value, "assessmentId", path);
  env.task_kind = parse_task_kind(string_field(value, "taskKind", path));
  env.schema_version = integer_field(value, "schemaVersion", path);
  env.completed_at = timestamp_field(value, "completedAt", path);
  for (const json& r : array_field(value, "results", path)) env.results.push_back(parse_step_result(r));
  return env;
}

std::string envelope_record(const ResultEnvelope& envelope) { return envelope_json(envelope).dump(); }

ResultEnvelope parse_envelope_record(std::string_view line) {
  json value = json::parse(line, nullptr, false);
  if (value.is_discarded()) throw ParseError("SYNTAX", "", "result record is not valid JSON");
  return parse_envelope(value);
}

ordered_json active_items_json(const ActiveItemSet& active) {
  ordered_json out = ordered_json::object();
  out["itemIds"] = active.item_ids;
  out["derivedFrom"] = active.derived_from;
  out["derivedAt"] = active.derived_at ? ordered_json(format_timestamp(*active.derived_at)) : ordered_json(nullptr);
  return out;
}

ActiveItemSet parse_active_items(const json& value) {
  ActiveItemSet active;
  if (value.is_array()) {
    active.item_ids = string_array(value, "activeItems");
    return active;
  }
  const std::string path = "activeItems";
  active.item_ids = string_array(array_field(value, "itemIds", path), append_path(path, "itemIds"));
  if (value.contains("derivedFrom")) active.derived_from = string_field(value, "derivedFrom", path);
  if (value.contains("derivedAt") && !value["derivedAt"].is_null()) {
    active.derived_at = timestamp_field(value, "derivedAt", path);
  }
  return active;
}

ordered_json task_ref_json(const TaskRef& ref) {
  return {{"assessment", ref.assessment_id}, {"kind", to_string(ref.kind)}};
}

ordered_json occurrence_json(const Occurrence& occ) {
  ordered_json out = ordered_json::object();
  out["occurrenceId"] = occ.occurrence_id;
  out["participantId"] = occ.participant_id;
  out["task"] = task_ref_json(occ.task);
  out["dueAt"] = format_timestamp(occ.due_at);
  out["expiresAt"] = format_timestamp(occ.expires_at);
  out["remindAt"] = format_timestamp(occ.remind_at);
  out["snoozeCount"] = occ.snooze_count;
  out["state"] = to_string(occ.state);
  out["sessionId"] = occ.session_id ? ordered_json(*occ.session_id) : ordered_json(nullptr);
  return out;
}

ordered_json schedule_json(const ScheduleSpec& spec) {
  ordered_json out = ordered_json::object();
  out["task"] = task_ref_json(spec.task);
  ordered_json rec = std::visit(
      [](const auto& r) -> ordered_json {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, Daily>) {
          return {{"type", "daily"}};
        } else if constexpr (std::is_same_v<T, Weekly>) {
          return {{"type", "weekly"}, {"weekday", format_weekday(r.weekday)}};
        } else if constexpr (std::is_same_v<T, Monthly>) {
          return {{"type", "monthly"}, {"dayOfMonth", r.day_of_month}};
        } else {
          return {{"type", "every"}, {"interval", format_duration(r.interval)}};
        }
      },
      spec.recurrence);
  out["recurrence"] = std::move(rec);
  out["anchorTime"] = format_time_of_day(spec.anchor_time);
  out["timezone"] = spec.timezone;
  out["window"] = format_duration(spec.window);
  char date[16];
  std::snprintf(date, sizeof date, "%04d-%02u-%02u", static_cast<int>(spec.start_date.year()),
                static_cast<unsigned>(spec.start_date.month()), static_cast<unsigned>(spec.start_date.day()));
  out["startDate"] = date;
  return out;
}

ScheduleSpec parse_schedule(const json& value, const std::string& path) {
  ScheduleSpec spec;
  const std::string task_path = append_path(path, "task");
  const json& task = field(value, "task", path);
  spec.task.assessment_id = string_field(task, "assessment", task_path);
  try {
    spec.task.kind = parse_task_kind(string_field(task, "kind", task_path));
  } catch (const ParseError& e) {
    if (e.code() != "BAD_TASK_KIND") throw;
    throw ParseError("BAD_TASK_KIND", append_path(task_path, "kind"), e.what());
  }

  const std::string rec_path = append_path(path, "recurrence");
  const json& rec = field(value, "recurrence", path);
  const std::string type = string_field(rec, "type", rec_path);
  try {
    if (type == "daily") {
      spec.recurrence = Daily{};
    } else if (type == "weekly") {
      spec.recurrence = Weekly{parse_weekday(string_field(rec, "weekday", rec_path))};
    } else if (type == "monthly") {
      const auto day = integer_field(rec, "dayOfMonth", rec_path);
      if (day < 1 || day > 28) {
        throw ParseError("BAD_DAY_OF_MONTH", append_path(rec_path, "dayOfMonth"),
                         "dayOfMonth must be within 1..28, got " + std::to_string(day));
      }
      spec.recurrence = Monthly{static_cast<unsigned>(day)};
    } else if (type == "every") {
      spec.recurrence = Every{parse_duration(string_field(rec, "interval", rec_path))};
    } else {
      throw ParseError("BAD_RECURRENCE", append_path(rec_path, "type"), "unknown recurrence type '" + type + "'");
    }
    spec.anchor_time = parse_time_of_day(string_field(value, "anchorTime", path));
  } catch (const ParseError& e) {
    if (!e.path().empty()) throw;
    throw ParseError(e.code(), path, path + ": " + e.what());
  }
  if (value.contains("timezone")) spec.timezone = string_field(value, "timezone", path);
  if (value.contains("window")) spec.window = parse_duration(string_field(value, "window", path));
  if (value.contains("startDate")) {
    const std::string text = string_field(value, "startDate", path);
    int y = 0;
    unsigned m = 0, d = 0;
    if (std::sscanf(text.c_str(), "%4d-%2u-%2u", &y, &m, &d) != 3) {
      throw ParseError("BAD_START_DATE", append_path(path, "startDate"), "expected YYYY-MM-DD");
    }
    spec.start_date = std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d};
  }
  validate_schedule(spec);
  return spec;
}

ordered_json session_json(const SurveySession& session) {
  ordered_json out = ordered_json::object();
  out["sessionId"] = session.session_id();
  out["participantId"] = session.participant_id();
  out["planId"] = session.plan().plan_id;
  out["taskKind"] = to_string(session.plan().task_kind);
  out["status"] = to_string(session.status());
  out["cursor"] = session.cursor();
  out["stepCount"] = session.plan().steps.size();
  out["startedAt"] = format_timestamp(session.started_at());
  return out;
}

ordered_json report_json(const ValidationReport& report) {
  ordered_json out = ordered_json::object();
  out["valid"] = report.valid();
  out["errors"] = report.error_count();
  out["warnings"] = report.warning_count();
  ordered_json diags = ordered_json::array();
  for (const auto& d : report.diagnostics) {
    diags.push_back({{"code", d.code}, {"severity", to_string(d.severity)}, {"path", d.path}, {"message", d.message}});
  }
  out["diagnostics"] = std::move(diags);
  return out;
}

}  // namespace visurvey::wire
