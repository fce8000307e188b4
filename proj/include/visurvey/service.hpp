#pragma once

#include "json.hpp"
#include "visurvey/deployment.hpp"
#include "visurvey/error.hpp"
#include "visurvey/ids.hpp"
#include "visurvey/result_store.hpp"
#include "visurvey/session.hpp"

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

namespace visurvey {

struct ApiRequest {
  std::string method;
  /// Raw path, percent-encoded segments allowed: /v1/sessions/s-000001/step
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
  /// Value of the Authorization header, if any.
  std::string authorization;
};

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// Raised by the typed operations; rendered as the uniform error body
/// {"httpStatus", "code", "message", "path"}.
class ApiError : public Error {
public:
  ApiError(int status, std::string code, const std::string& message)
      : Error(std::move(code), message), status_(status) {}
  int status() const noexcept { return status_; }

private:
  int status_;
};

struct ServiceOptions {
  /// Static bearer token; empty disables authentication.
  std::string bearer_token;
  /// Enables POST /v1/debug/clock when set.
  ManualClock* adjustable_clock = nullptr;
};

/// The /v1 API over a loaded deployment. All public members are safe to call
/// concurrently: mutations are serialized per session and per participant.
class ApiService {
public:
  ApiService(Deployment deployment, std::unique_ptr<ResultSink> sink, const Clock& clock, IdSource& ids,
             ServiceOptions options = {});

  /// Routes a request, turning ApiError (and malformed bodies) into error responses.
  ApiResponse handle(const ApiRequest& request);

  // Typed operations; each throws ApiError.
  nlohmann::ordered_json get_study(const std::string& study_id) const;
  nlohmann::ordered_json get_due(const std::string& participant_id);
  nlohmann::ordered_json create_session(const std::string& participant_id, const std::string& occurrence_id);
  nlohmann::ordered_json get_step(const std::string& session_id);
  /// body: {"answer": {...}} or {"back": true}; optional "stepId" guard.
  nlohmann::ordered_json post_answer(const std::string& session_id, const nlohmann::json& body);
  nlohmann::ordered_json complete_ack(const std::string& session_id);
  nlohmann::ordered_json post_snooze(const std::string& occurrence_id);
  /// Canonical records, one per line.
  std::string export_records(const ExportFilter& filter) const;

  const Deployment& deployment() const { return deployment_; }
  ResultSink& sink() { return *sink_; }
  /// Latest derived active items for a participant and pair (by full id).
  ActiveItemSet active_items(const std::string& participant_id, const std::string& full_assessment_id);

private:
  struct ParticipantEntry {
    std::mutex mutex;
    ParticipantSchedule schedule;
    /// Keyed by the pair's full-assessment identifier.
    std::map<std::string, ActiveItemSet> active;
  };

  struct SessionEntry {
    std::mutex mutex;
    SurveySession session;
    std::string occurrence_id;
    /// Mirrors session.status() so other entities can read it without the lock.
    std::atomic<SessionStatus> status{SessionStatus::in_progress};
    nlohmann::ordered_json completion;

    explicit SessionEntry(SurveySession s) : session(std::move(s)) {}
  };

  ParticipantEntry& participant(const std::string& participant_id);
  std::shared_ptr<SessionEntry> session_entry(const std::string& session_id);
  /// Refreshes due state for a participant; caller holds entry.mutex.
  std::vector<Occurrence> refresh_locked(ParticipantEntry& entry, Timestamp now);
  ActiveItemSet current_active_locked(const ParticipantEntry& entry, const AssessmentPair& pair, Timestamp now) const;
  bool session_live(const std::string& session_id, Timestamp now);
  nlohmann::ordered_json step_response(SessionEntry& entry);
  nlohmann::ordered_json apply_to_session(const std::string& session_id, const nlohmann::json* answer, bool back,
                                          const std::string* expected_step);
  void complete_locked(SessionEntry& entry, Timestamp now);

  Deployment deployment_;
  std::unique_ptr<ResultSink> sink_;
  const Clock& clock_;
  IdSource& ids_;
  ServiceOptions options_;

  std::map<std::string, std::unique_ptr<ParticipantEntry>> participants_;

  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<SessionEntry>> sessions_;

  mutable std::shared_mutex index_mutex_;
  std::map<std::string, std::string> occurrence_owner_;
};

/// Serves `service` over HTTP until stop() (or process exit). Also serves
/// GET /assets/{imageTitle} from `assets_dir` when given.
class HttpServer {
public:
  HttpServer(ApiService& service, std::optional<std::filesystem::path> assets_dir, int threads = 8);
  ~HttpServer();

  /// Binds; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Blocks serving requests.
  void listen();
  void stop();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace visurvey
