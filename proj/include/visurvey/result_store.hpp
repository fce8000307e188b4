#pragma once

#include "json.hpp"
#include "visurvey/session.hpp"
#include "visurvey/time.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace visurvey {

enum class SinkKind { file, http, memory };

const char* to_string(SinkKind kind);

struct FileSinkConfig {
  std::filesystem::path path;
  /// Rotate once the active file reaches this size; 0 disables rotation.
  std::uint64_t rotate_bytes = 0;

  bool operator==(const FileSinkConfig&) const = default;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds backoff_base{200};

  bool operator==(const RetryPolicy&) const = default;
};

struct HttpSinkConfig {
  /// http://host[:port]/path
  std::string endpoint;
  /// Name of the environment variable holding the bearer token, if any.
  std::string auth_token_env;
  RetryPolicy retry;
  /// Where undeliverable envelopes are parked (newline-delimited records).
  std::filesystem::path outbox;

  bool operator==(const HttpSinkConfig&) const = default;
};

struct MemorySinkConfig {
  bool operator==(const MemorySinkConfig&) const = default;
};

struct SinkConfig {
  std::variant<FileSinkConfig, HttpSinkConfig, MemorySinkConfig> params;

  SinkKind kind() const;
  bool operator==(const SinkConfig&) const = default;
};

/// {"kind":"file","path":...,"rotateBytes":N}
/// {"kind":"http","endpoint":...,"authTokenEnv":...,"maxAttempts":N,"backoffMs":N,"outbox":...}
/// {"kind":"memory"}
/// Parameters of a different kind are rejected. Relative paths resolve
/// against `base_dir`. Throws ParseError.
SinkConfig parse_sink_config(const nlohmann::json& value, const std::filesystem::path& base_dir = {});

struct SinkAck {
  std::string envelope_id;
  SinkKind sink_kind = SinkKind::memory;
  Timestamp persisted_at;
  int attempts = 1;
};

struct ExportFilter {
  std::optional<std::string> study_id;
  std::optional<std::string> participant_id;
  /// Inclusive lower and exclusive upper bound on completedAt.
  std::optional<Timestamp> from;
  std::optional<Timestamp> to;

  bool matches(const ResultEnvelope& env) const;
};

/// Destination for completed-session envelopes. Appends are serialized by
/// the sink itself. Duplicate appends are allowed; export deduplicates.
class ResultSink {
public:
  virtual ~ResultSink() = default;
  virtual SinkKind kind() const = 0;
  /// Throws StoreError IO_ERROR or DELIVERY_FAILED.
  virtual SinkAck append(const ResultEnvelope& envelope) = 0;
  /// Every stored record in append order. Throws StoreError NOT_READABLE.
  virtual std::vector<ResultEnvelope> snapshot() const = 0;
};

class MemorySink final : public ResultSink {
public:
  explicit MemorySink(const Clock& clock) : clock_(clock) {}

  SinkKind kind() const override { return SinkKind::memory; }
  SinkAck append(const ResultEnvelope& envelope) override;
  std::vector<ResultEnvelope> snapshot() const override;

private:
  const Clock& clock_;
  mutable std::mutex mutex_;
  std::vector<ResultEnvelope> records_;
};

/// Newline-delimited canonical records. Rotated files are named
/// "<path>.1", "<path>.2", ... oldest first.
class FileSink final : public ResultSink {
public:
  FileSink(FileSinkConfig config, const Clock& clock);

  SinkKind kind() const override { return SinkKind::file; }
  SinkAck append(const ResultEnvelope& envelope) override;
  std::vector<ResultEnvelope> snapshot() const override;

  /// Rotated segments oldest first, then the active file.
  std::vector<std::filesystem::path> segments() const;

private:
  void rotate_locked();

  FileSinkConfig config_;
  const Clock& clock_;
  mutable std::mutex mutex_;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// POSTs the canonical record. Non-2xx responses and transport errors are
/// retried with exponential backoff; after the last attempt the record is
/// parked in the outbox and DELIVERY_FAILED is thrown.
class HttpSink final : public ResultSink {
public:
  using Transport = std::function<HttpResponse(const std::string& body)>;
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  HttpSink(HttpSinkConfig config, const Clock& clock);
  /// Test seam: replace the network and the backoff sleep.
  HttpSink(HttpSinkConfig config, const Clock& clock, Transport transport, Sleeper sleeper);

  SinkKind kind() const override { return SinkKind::http; }
  SinkAck append(const ResultEnvelope& envelope) override;
  /// Not readable: throws StoreError NOT_READABLE.
  std::vector<ResultEnvelope> snapshot() const override;

  /// Envelopes parked after failed delivery (survives restarts).
  std::vector<ResultEnvelope> outbox() const;
  /// Retries every parked envelope once through the retry policy; the
  /// ones that still fail stay parked. Returns how many were delivered.
  std::size_t flush_outbox();

private:
  /// Returns the attempt count on success, nullopt when retries ran out.
  std::optional<int> deliver(const std::string& body);
  void park_locked(const std::string& record);

  HttpSinkConfig config_;
  const Clock& clock_;
  Transport transport_;
  Sleeper sleeper_;
  mutable std::mutex mutex_;
};

std::unique_ptr<ResultSink> make_sink(const SinkConfig& config, const Clock& clock);

/// Records matching `filter`, one per envelopeId (first stored copy wins),
/// ordered by (completedAt, envelopeId).
std::vector<ResultEnvelope> export_results(const ResultSink& sink, const ExportFilter& filter = {});

/// Reads a newline-delimited record file. Blank lines are skipped.
/// Throws StoreError NOT_READABLE or CORRUPT_RECORD (with line number).
std::vector<ResultEnvelope> read_record_file(const std::filesystem::path& path);

}  // namespace visurvey
