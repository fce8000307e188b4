#include "visurvey/service.hpp"

#include "visurvey/wire.hpp"

#include <algorithm>
#include <sstream>

namespace visurvey {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string percent_decode(std::string_view in) {
  std::string out;
  out.reserve(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] == '%' && i + 2 < in.size()) {
      auto hex = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
      };
      const int hi = hex(in[i + 1]);
      const int lo = hex(in[i + 2]);
      if (hi >= 0 && lo >= 0) {
        out.push_back(static_cast<char>(hi * 16 + lo));
        i += 2;
        continue;
      }
    }
    out.push_back(in[i]);
  }
  return out;
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= path.size()) {
    const std::size_t slash = path.find('/', start);
    const std::size_t end = slash == std::string_view::npos ? path.size() : slash;
    if (end > start) parts.push_back(percent_decode(path.substr(start, end - start)));
    if (slash == std::string_view::npos) break;
    start = slash + 1;
  }
  return parts;
}

std::string error_body(int status, const std::string& code, const std::string& message, const std::string& path) {
  ordered_json body = ordered_json::object();
  body["httpStatus"] = status;
  body["code"] = code;
  body["message"] = message;
  body["path"] = path;
  return body.dump();
}

ApiError from_session_error(const SessionError& e) {
  if (e.code() == "ANSWER_MISMATCH") return ApiError(422, "ANSWER_MISMATCH", e.what());
  if (e.code() == "AT_FIRST_STEP") return ApiError(409, "AT_FIRST_STEP", e.what());
  return ApiError(409, "SESSION_NOT_IN_PROGRESS", e.what());
}

}  // namespace

ApiService::ApiService(Deployment deployment, std::unique_ptr<ResultSink> sink, const Clock& clock, IdSource& ids,
                       ServiceOptions options)
    : deployment_(std::move(deployment)), sink_(std::move(sink)), clock_(clock), ids_(ids),
      options_(std::move(options)) {
  for (const Enrollment& e : deployment_.participants) {
    auto entry = std::make_unique<ParticipantEntry>();
    entry->schedule.participant_id = e.participant_id;
    entry->schedule.enrolled_at = e.enrolled_at;
    participants_.emplace(e.participant_id, std::move(entry));
  }
}

ApiService::ParticipantEntry& ApiService::participant(const std::string& participant_id) {
  auto it = participants_.find(participant_id);
  if (it == participants_.end()) {
    throw ApiError(404, "UNKNOWN_PARTICIPANT", "participant '" + participant_id + "' is not enrolled");
  }
  return *it->second;
}

std::shared_ptr<ApiService::SessionEntry> ApiService::session_entry(const std::string& session_id) {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw ApiError(404, "UNKNOWN_SESSION", "session '" + session_id + "' does not exist");
  return it->second;
}

std::vector<Occurrence> ApiService::refresh_locked(ParticipantEntry& entry, Timestamp now) {
  std::vector<Occurrence> due = due_occurrences(deployment_.schedules, entry.schedule, now);
  std::unique_lock lock(index_mutex_);
  for (const auto& [id, occ] : entry.schedule.occurrences) occurrence_owner_.emplace(id, occ.participant_id);
  return due;
}

ActiveItemSet ApiService::current_active_locked(const ParticipantEntry& entry, const AssessmentPair& pair,
                                                Timestamp now) const {
  auto it = entry.active.find(pair.full.identifier);
  if (it == entry.active.end()) return {};
  const ActiveItemSet& active = it->second;
  if (deployment_.active_items_max_age && active.derived_at &&
      *active.derived_at + *deployment_.active_items_max_age < now) {
    return {};
  }
  return active;
}

ActiveItemSet ApiService::active_items(const std::string& participant_id, const std::string& full_assessment_id) {
  ParticipantEntry& entry = participant(participant_id);
  std::lock_guard lock(entry.mutex);
  auto it = entry.active.find(full_assessment_id);
  return it == entry.active.end() ? ActiveItemSet{} : it->second;
}

bool ApiService::session_live(const std::string& session_id, Timestamp now) {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) return false;
  const SessionEntry& entry = *it->second;
  if (entry.status.load() != SessionStatus::in_progress) return false;
  // started_at is immutable, so reading it without the entry lock is safe.
  return now - entry.session.started_at() <= deployment_.session_ttl;
}

ordered_json ApiService::get_study(const std::string& study_id) const {
  for (const auto& study : deployment_.studies) {
    if (study.study_id == study_id) return to_canonical_json(study);
  }
  throw ApiError(404, "UNKNOWN_STUDY", "study '" + study_id + "' is not loaded");
}

ordered_json ApiService::get_due(const std::string& participant_id) {
  ParticipantEntry& entry = participant(participant_id);
  const Timestamp now = clock_.now();
  std::lock_guard lock(entry.mutex);
  ordered_json out = ordered_json::array();
  for (const Occurrence& occ : refresh_locked(entry, now)) {
    ordered_json item = wire::occurrence_json(occ);
    if (occ.task.kind == TaskKind::spot) {
      const StudyDefinition* study = deployment_.study_for_assessment(occ.task.assessment_id);
      const AssessmentPair* pair = study ? study->find_assessment(occ.task.assessment_id) : nullptr;
      item["noActiveItems"] = pair ? current_active_locked(entry, *pair, now).empty() : true;
    }
    out.push_back(std::move(item));
  }
  return out;
}

ordered_json ApiService::create_session(const std::string& participant_id, const std::string& occurrence_id) {
  ParticipantEntry& entry = participant(participant_id);
  const Timestamp now = clock_.now();
  std::lock_guard lock(entry.mutex);
  refresh_locked(entry, now);

  auto it = entry.schedule.occurrences.find(occurrence_id);
  if (it == entry.schedule.occurrences.end()) {
    throw ApiError(404, "UNKNOWN_OCCURRENCE", "occurrence '" + occurrence_id + "' is not due for " + participant_id);
  }
  Occurrence& occ = it->second;
  if (occ.state == OccurrenceState::completed) {
    throw ApiError(409, "OCCURRENCE_COMPLETED", "occurrence '" + occurrence_id + "' is already completed");
  }
  if (occ.state == OccurrenceState::expired || now >= occ.expires_at) {
    throw ApiError(410, "OCCURRENCE_EXPIRED", "occurrence '" + occurrence_id + "' has expired");
  }
  if (occ.session_id && session_live(*occ.session_id, now)) {
    throw ApiError(409, "SESSION_EXISTS",
                   "occurrence '" + occurrence_id + "' already has session '" + *occ.session_id + "' in progress");
  }

  const StudyDefinition* study = deployment_.study_for_assessment(occ.task.assessment_id);
  const AssessmentPair* pair = study ? study->find_assessment(occ.task.assessment_id) : nullptr;
  if (!pair) throw ApiError(404, "UNKNOWN_ASSESSMENT", "assessment '" + occ.task.assessment_id + "' is not loaded");
  TaskPlan plan = occ.task.kind == TaskKind::full
                      ? compile_full_task(*pair, study->items, study->study_id)
                      : compile_spot_task(*pair, current_active_locked(entry, *pair, now), study->items, study->study_id);

  auto session_entry = std::make_shared<SessionEntry>(SurveySession::start(std::move(plan), participant_id, clock_, ids_));
  session_entry->occurrence_id = occurrence_id;
  const std::string session_id = session_entry->session.session_id();
  occ.session_id = session_id;
  // Not yet published, so no other thread can hold its lock.
  ordered_json out = step_response(*session_entry);
  out["occurrenceId"] = occurrence_id;
  {
    std::unique_lock sessions_lock(sessions_mutex_);
    sessions_.emplace(session_id, std::move(session_entry));
  }
  return out;
}

ordered_json ApiService::step_response(SessionEntry& entry) {
  ordered_json out = ordered_json::object();
  out["session"] = wire::session_json(entry.session);
  if (entry.session.status() == SessionStatus::completed) {
    out["completion"] = entry.completion;
  } else if (const Step* step = entry.session.current_step()) {
    out["step"] = wire::step_json(*step, entry.session.cursor(), entry.session.plan().steps.size());
  }
  return out;
}

ordered_json ApiService::get_step(const std::string& session_id) {
  auto entry = session_entry(session_id);
  std::lock_guard lock(entry->mutex);
  if (entry->session.expire_if_stale(clock_.now(), deployment_.session_ttl)) entry->status = entry->session.status();
  return step_response(*entry);
}

void ApiService::complete_locked(SessionEntry& entry, Timestamp now) {
  const ResultEnvelope envelope = entry.session.finalize();
  ordered_json completion = ordered_json::object();
  completion["envelopeId"] = envelope.envelope_id;
  try {
    sink_->append(envelope);
    completion["persisted"] = true;
  } catch (const StoreError& e) {
    // DELIVERY_FAILED envelopes sit in the sink's outbox.
    completion["persisted"] = false;
    completion["storeError"] = e.code();
  }

  ParticipantEntry& owner = participant(entry.session.participant_id());
  std::lock_guard lock(owner.mutex);
  auto it = owner.schedule.occurrences.find(entry.occurrence_id);
  if (it != owner.schedule.occurrences.end()) it->second = complete_occurrence(it->second, envelope.session_id, now);
  if (envelope.task_kind == TaskKind::full) {
    const StudyDefinition* study = deployment_.study_for_assessment(envelope.assessment_id);
    const AssessmentPair* pair = study->find_assessment(envelope.assessment_id);
    ActiveItemSet active = derive_active_items(envelope, *pair, study->items);
    completion["activeItems"] = active.item_ids;
    owner.active.insert_or_assign(pair->full.identifier, std::move(active));
  }
  entry.completion = std::move(completion);
}

ordered_json ApiService::apply_to_session(const std::string& session_id, const json* answer, bool back,
                                          const std::string* expected_step) {
  auto entry = session_entry(session_id);
  std::lock_guard lock(entry->mutex);
  const Timestamp now = clock_.now();
  if (entry->session.expire_if_stale(now, deployment_.session_ttl)) entry->status = entry->session.status();
  if (entry->session.status() != SessionStatus::in_progress) {
    throw ApiError(409, "SESSION_NOT_IN_PROGRESS",
                   "session '" + session_id + "' is " + to_string(entry->session.status()));
  }

  // An occurrence that lapsed mid-session produces no envelope.
  {
    ParticipantEntry& owner = participant(entry->session.participant_id());
    std::lock_guard owner_lock(owner.mutex);
    refresh_locked(owner, now);
    auto it = owner.schedule.occurrences.find(entry->occurrence_id);
    if (it != owner.schedule.occurrences.end() && it->second.state == OccurrenceState::expired) {
      entry->session.abandon(now);
      entry->status = entry->session.status();
      throw ApiError(410, "OCCURRENCE_EXPIRED", "occurrence '" + entry->occurrence_id + "' expired during the session");
    }
  }

  if (expected_step) {
    const Step* step = entry->session.current_step();
    if (!step || step->step_id != *expected_step) {
      throw ApiError(422, "STEP_MISMATCH", "answer targets step '" + *expected_step + "' but the current step is '" +
                                               (step ? step->step_id : std::string("none")) + "'");
    }
  }

  try {
    if (back) {
      entry->session.go_back(clock_);
    } else {
      entry->session.submit_answer(wire::parse_answer(*answer), clock_);
    }
  } catch (const SessionError& e) {
    throw from_session_error(e);
  } catch (const ParseError& e) {
    throw ApiError(422, "BAD_ANSWER", e.what());
  }
  entry->status = entry->session.status();
  if (entry->session.status() == SessionStatus::completed) complete_locked(*entry, now);
  return step_response(*entry);
}

ordered_json ApiService::post_answer(const std::string& session_id, const json& body) {
  if (!body.is_object()) throw ApiError(400, "BAD_REQUEST", "answer body must be a JSON object");
  std::optional<std::string> expected;
  if (body.contains("stepId")) {
    if (!body["stepId"].is_string()) throw ApiError(400, "BAD_REQUEST", "stepId must be a string");
    expected = body["stepId"].get<std::string>();
  }
  const std::string* guard = expected ? &*expected : nullptr;
  if (body.contains("back") && body["back"] == true) return apply_to_session(session_id, nullptr, true, guard);
  if (!body.contains("answer")) throw ApiError(400, "BAD_REQUEST", "body needs \"answer\" or \"back\": true");
  return apply_to_session(session_id, &body["answer"], false, guard);
}

ordered_json ApiService::complete_ack(const std::string& session_id) {
  static const json ack = {{"type", "ack"}};
  return apply_to_session(session_id, &ack, false, nullptr);
}

ordered_json ApiService::post_snooze(const std::string& occurrence_id) {
  const Timestamp now = clock_.now();
  auto owner_of = [&]() -> std::optional<std::string> {
    std::shared_lock lock(index_mutex_);
    auto it = occurrence_owner_.find(occurrence_id);
    if (it == occurrence_owner_.end()) return std::nullopt;
    return it->second;
  };
  std::optional<std::string> owner = owner_of();
  if (!owner) {
    for (auto& [id, entry] : participants_) {
      std::lock_guard lock(entry->mutex);
      refresh_locked(*entry, now);
    }
    owner = owner_of();
  }
  if (!owner) throw ApiError(404, "UNKNOWN_OCCURRENCE", "occurrence '" + occurrence_id + "' does not exist");

  ParticipantEntry& entry = participant(*owner);
  std::lock_guard lock(entry.mutex);
  refresh_locked(entry, now);
  Occurrence& occ = entry.schedule.occurrences.at(occurrence_id);
  try {
    occ = apply_snooze(occ, now, deployment_.reminders);
  } catch (const ScheduleError& e) {
    if (e.code() == "EXPIRED") throw ApiError(410, "OCCURRENCE_EXPIRED", e.what());
    if (e.code() == "COMPLETED") throw ApiError(409, "OCCURRENCE_COMPLETED", e.what());
    throw ApiError(409, e.code(), e.what());
  }
  return wire::occurrence_json(occ);
}

std::string ApiService::export_records(const ExportFilter& filter) const {
  std::vector<ResultEnvelope> records;
  try {
    records = export_results(*sink_, filter);
  } catch (const StoreError& e) {
    throw ApiError(503, e.code(), e.what());
  }
  std::string out;
  for (const auto& env : records) {
    out += wire::envelope_record(env);
    out += '\n';
  }
  return out;
}

ApiResponse ApiService::handle(const ApiRequest& request) {
  const std::vector<std::string> parts = split_path(request.path);
  auto respond = [](int status, const ordered_json& body) { return ApiResponse{status, "application/json", body.dump()}; };
  auto fail = [&](int status, const std::string& code, const std::string& message) {
    return ApiResponse{status, "application/json", error_body(status, code, message, request.path)};
  };
  auto parse_body = [&]() {
    if (request.body.empty()) return json::object();
    json body = json::parse(request.body, nullptr, false);
    if (body.is_discarded()) throw ApiError(400, "BAD_REQUEST", "request body is not valid JSON");
    return body;
  };

  try {
    if (parts.empty() || parts[0] != "v1") throw ApiError(404, "NOT_FOUND", "no route for " + request.path);
    if (!options_.bearer_token.empty() && request.authorization != "Bearer " + options_.bearer_token) {
      throw ApiError(401, "UNAUTHORIZED", "missing or invalid bearer token");
    }
    const std::string& m = request.method;
    const std::size_t n = parts.size();
    auto route = [&](std::initializer_list<const char*> shape) {
      if (shape.size() != n) return false;
      std::size_t i = 0;
      for (const char* seg : shape) {
        if (seg[0] != '{' && parts[i] != seg) return false;
        ++i;
      }
      return true;
    };
    auto method = [&](const char* expected) {
      if (m != expected) throw ApiError(405, "METHOD_NOT_ALLOWED", m + " is not allowed on " + request.path);
    };

    if (route({"v1", "studies", "{id}"})) {
      method("GET");
      return respond(200, get_study(parts[2]));
    }
    if (route({"v1", "participants", "{id}", "due"})) {
      method("GET");
      return respond(200, get_due(parts[2]));
    }
    if (route({"v1", "participants", "{id}", "occurrences", "{id}", "sessions"})) {
      method("POST");
      return respond(201, create_session(parts[2], parts[4]));
    }
    if (route({"v1", "sessions", "{id}", "step"})) {
      method("GET");
      return respond(200, get_step(parts[2]));
    }
    if (route({"v1", "sessions", "{id}", "answers"})) {
      method("POST");
      return respond(200, post_answer(parts[2], parse_body()));
    }
    if (route({"v1", "sessions", "{id}", "complete-ack"})) {
      method("POST");
      return respond(200, complete_ack(parts[2]));
    }
    if (route({"v1", "occurrences", "{id}", "snooze"})) {
      method("POST");
      return respond(200, post_snooze(parts[2]));
    }
    if (route({"v1", "export"})) {
      method("GET");
      ExportFilter filter;
      try {
        if (auto it = request.query.find("studyId"); it != request.query.end()) filter.study_id = it->second;
        if (auto it = request.query.find("participantId"); it != request.query.end()) filter.participant_id = it->second;
        if (auto it = request.query.find("from"); it != request.query.end()) filter.from = parse_timestamp(it->second);
        if (auto it = request.query.find("to"); it != request.query.end()) filter.to = parse_timestamp(it->second);
      } catch (const ParseError& e) {
        throw ApiError(400, "BAD_REQUEST", e.what());
      }
      return ApiResponse{200, "application/x-ndjson", export_records(filter)};
    }
    if (route({"v1", "debug", "clock"}) && options_.adjustable_clock) {
      method("POST");
      const json body = parse_body();
      try {
        if (body.contains("now")) options_.adjustable_clock->set(parse_timestamp(body.at("now").get<std::string>()));
        if (body.contains("advance")) options_.adjustable_clock->advance(parse_duration(body.at("advance").get<std::string>()));
      } catch (const std::exception& e) {
        throw ApiError(400, "BAD_REQUEST", e.what());
      }
      return respond(200, ordered_json{{"now", format_timestamp(clock_.now())}});
    }
    throw ApiError(404, "NOT_FOUND", "no route for " + m + " " + request.path);
  } catch (const ApiError& e) {
    return fail(e.status(), e.code(), e.what());
  } catch (const CompileError& e) {
    return fail(422, e.code(), e.what());
  } catch (const Error& e) {
    return fail(500, e.code(), e.what());
  } catch (const std::exception& e) {
    return fail(500, "INTERNAL", e.what());
  }
}

}  // namespace visurvey
