#include "visurvey/result_store.hpp"

#include "visurvey/error.hpp"
#include "visurvey/wire.hpp"

#include "httplib.h"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <set>
#include <thread>

namespace visurvey {

using nlohmann::json;

const char* to_string(SinkKind kind) {
  switch (kind) {
    case SinkKind::file: return "file";
    case SinkKind::http: return "http";
    case SinkKind::memory: return "memory";
  }
  return "memory";
}

SinkKind SinkConfig::kind() const {
  if (std::holds_alternative<FileSinkConfig>(params)) return SinkKind::file;
  if (std::holds_alternative<HttpSinkConfig>(params)) return SinkKind::http;
  return SinkKind::memory;
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

void only_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& kind) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; })) {
      throw ParseError("CONFLICTING_SINK_PARAMS", append_path("sink", it.key()),
                       "sink of kind '" + kind + "' does not take '" + it.key() + "'");
    }
  }
}

std::string required_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError("MISSING_FIELD", append_path("sink", key), std::string("sink.") + key + " is required");
  if (!it->is_string()) throw ParseError("TYPE_MISMATCH", append_path("sink", key), std::string("sink.") + key + " must be a string");
  return it->get<std::string>();
}

std::int64_t optional_integer(const json& obj, const char* key, std::int64_t fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number_integer() || it->get<std::int64_t>() < 0) {
    throw ParseError("TYPE_MISMATCH", append_path("sink", key), std::string("sink.") + key + " must be a non-negative integer");
  }
  return it->get<std::int64_t>();
}

[[noreturn]] void io_error(const std::string& what, const std::filesystem::path& path) {
  throw StoreError("IO_ERROR", what + " " + path.string() + ": " + std::strerror(errno));
}

/// Appends one line with O_APPEND and fsyncs before returning.
void append_line(const std::filesystem::path& path, const std::string& line) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) io_error("cannot open", path);
  std::string data = line + "\n";
  const char* p = data.data();
  std::size_t left = data.size();
  while (left > 0) {
    const ssize_t n = ::write(fd, p, left);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      io_error("cannot write", path);
    }
    p += n;
    left -= static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) {
    ::close(fd);
    io_error("cannot sync", path);
  }
  ::close(fd);
}

}  // namespace

SinkConfig parse_sink_config(const json& value, const std::filesystem::path& base_dir) {
  if (!value.is_object()) throw ParseError("TYPE_MISMATCH", "sink", "sink config must be an object");
  const std::string kind = required_string(value, "kind");
  SinkConfig config;
  if (kind == "file") {
    only_keys(value, {"kind", "path", "rotateBytes"}, kind);
    FileSinkConfig file;
    file.path = resolve(base_dir, required_string(value, "path"));
    file.rotate_bytes = static_cast<std::uint64_t>(optional_integer(value, "rotateBytes", 0));
    config.params = file;
  } else if (kind == "http") {
    only_keys(value, {"kind", "endpoint", "authTokenEnv", "maxAttempts", "backoffMs", "outbox"}, kind);
    HttpSinkConfig http;
    http.endpoint = required_string(value, "endpoint");
    if (http.endpoint.rfind("http://", 0) != 0) {
      throw ParseError("BAD_ENDPOINT", "sink.endpoint", "only http:// endpoints are supported");
    }
    if (value.contains("authTokenEnv")) http.auth_token_env = required_string(value, "authTokenEnv");
    http.retry.max_attempts = static_cast<int>(optional_integer(value, "maxAttempts", 3));
    if (http.retry.max_attempts < 1) throw ParseError("TYPE_MISMATCH", "sink.maxAttempts", "maxAttempts must be >= 1");
    http.retry.backoff_base = std::chrono::milliseconds{optional_integer(value, "backoffMs", 200)};
    http.outbox = resolve(base_dir, value.contains("outbox") ? required_string(value, "outbox") : "outbox.ndjson");
    config.params = http;
  } else if (kind == "memory") {
    only_keys(value, {"kind"}, kind);
    config.params = MemorySinkConfig{};
  } else {
    throw ParseError("BAD_SINK_KIND", "sink.kind", "unknown sink kind '" + kind + "'");
  }
  return config;
}

bool ExportFilter::matches(const ResultEnvelope& env) const {
  if (study_id && env.study_id != *study_id) return false;
  if (participant_id && env.participant_id != *participant_id) return false;
  if (from && env.completed_at < *from) return false;
  if (to && env.completed_at >= *to) return false;
  return true;
}

// ---------------------------------------------------------------------------

SinkAck MemorySink::append(const ResultEnvelope& envelope) {
  std::lock_guard lock(mutex_);
  records_.push_back(envelope);
  return {envelope.envelope_id, SinkKind::memory, clock_.now(), 1};
}

std::vector<ResultEnvelope> MemorySink::snapshot() const {
  std::lock_guard lock(mutex_);
  return records_;
}

// ---------------------------------------------------------------------------

FileSink::FileSink(FileSinkConfig config, const Clock& clock) : config_(std::move(config)), clock_(clock) {}

std::vector<std::filesystem::path> FileSink::segments() const {
  std::vector<std::filesystem::path> out;
  for (int n = 1;; ++n) {
    std::filesystem::path p = config_.path;
    p += "." + std::to_string(n);
    if (!std::filesystem::exists(p)) break;
    out.push_back(std::move(p));
  }
  if (std::filesystem::exists(config_.path)) out.push_back(config_.path);
  return out;
}

void FileSink::rotate_locked() {
  int n = 1;
  for (;; ++n) {
    std::filesystem::path p = config_.path;
    p += "." + std::to_string(n);
    if (!std::filesystem::exists(p)) break;
  }
  std::filesystem::path target = config_.path;
  target += "." + std::to_string(n);
  std::error_code ec;
  std::filesystem::rename(config_.path, target, ec);
  if (ec) throw StoreError("IO_ERROR", "cannot rotate " + config_.path.string() + ": " + ec.message());
}

SinkAck FileSink::append(const ResultEnvelope& envelope) {
  const std::string record = wire::envelope_record(envelope);
  std::lock_guard lock(mutex_);
  if (config_.rotate_bytes > 0) {
    std::error_code ec;
    const auto size = std::filesystem::file_size(config_.path, ec);
    if (!ec && size > 0 && size + record.size() + 1 > config_.rotate_bytes) rotate_locked();
  }
  append_line(config_.path, record);
  return {envelope.envelope_id, SinkKind::file, clock_.now(), 1};
}

std::vector<ResultEnvelope> FileSink::snapshot() const {
  std::lock_guard lock(mutex_);
  std::vector<ResultEnvelope> out;
  for (const auto& segment : segments()) {
    auto part = read_record_file(segment);
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

std::vector<ResultEnvelope> read_record_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StoreError("NOT_READABLE", "cannot read " + path.string());
  std::vector<ResultEnvelope> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(wire::parse_envelope_record(line));
    } catch (const Error& e) {
      throw StoreError("CORRUPT_RECORD", path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

HttpSink::Transport network_transport(const HttpSinkConfig& config) {
  const std::string& url = config.endpoint;
  const auto path_start = url.find('/', std::string("http://").size());
  const std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);
  std::string token;
  if (!config.auth_token_env.empty()) {
    if (const char* v = std::getenv(config.auth_token_env.c_str())) token = v;
  }
  return [origin, path, token](const std::string& body) {
    httplib::Client client(origin);
    client.set_connection_timeout(5);
    client.set_read_timeout(10);
    httplib::Headers headers;
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
    auto res = client.Post(path, headers, body, "application/json");
    if (!res) return HttpResponse{0, httplib::to_string(res.error())};
    return HttpResponse{res->status, res->body};
  };
}

}  // namespace

HttpSink::HttpSink(HttpSinkConfig config, const Clock& clock)
    : HttpSink(config, clock, network_transport(config),
               [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {}

HttpSink::HttpSink(HttpSinkConfig config, const Clock& clock, Transport transport, Sleeper sleeper)
    : config_(std::move(config)), clock_(clock), transport_(std::move(transport)), sleeper_(std::move(sleeper)) {}

std::optional<int> HttpSink::deliver(const std::string& body) {
  auto backoff = config_.retry.backoff_base;
  for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
    const HttpResponse res = transport_(body);
    if (res.status >= 200 && res.status < 300) return attempt;
    if (attempt < config_.retry.max_attempts) {
      sleeper_(backoff);
      backoff *= 2;
    }
  }
  return std::nullopt;
}

void HttpSink::park_locked(const std::string& record) { append_line(config_.outbox, record); }

SinkAck HttpSink::append(const ResultEnvelope& envelope) {
  const std::string record = wire::envelope_record(envelope);
  std::lock_guard lock(mutex_);
  if (auto attempts = deliver(record)) return {envelope.envelope_id, SinkKind::http, clock_.now(), *attempts};
  park_locked(record);
  throw StoreError("DELIVERY_FAILED", "envelope " + envelope.envelope_id + " not accepted by " + config_.endpoint +
                                          " after " + std::to_string(config_.retry.max_attempts) +
                                          " attempts; parked in " + config_.outbox.string());
}

std::vector<ResultEnvelope> HttpSink::snapshot() const {
  throw StoreError("NOT_READABLE", "an HTTP sink cannot be read back; export from the receiving service");
}

std::vector<ResultEnvelope> HttpSink::outbox() const {
  std::lock_guard lock(mutex_);
  if (!std::filesystem::exists(config_.outbox)) return {};
  return read_record_file(config_.outbox);
}

std::size_t HttpSink::flush_outbox() {
  std::lock_guard lock(mutex_);
  if (!std::filesystem::exists(config_.outbox)) return 0;
  const auto parked = read_record_file(config_.outbox);
  std::vector<std::string> still_parked;
  std::size_t delivered = 0;
  for (const auto& env : parked) {
    std::string record = wire::envelope_record(env);
    if (deliver(record)) {
      ++delivered;
    } else {
      still_parked.push_back(std::move(record));
    }
  }
  // Rewrite via a temporary so a crash leaves either the old or new outbox.
  std::filesystem::path tmp = config_.outbox;
  tmp += ".tmp";
  std::filesystem::remove(tmp);
  for (const auto& record : still_parked) append_line(tmp, record);
  std::error_code ec;
  if (still_parked.empty()) {
    std::filesystem::remove(config_.outbox, ec);
  } else {
    std::filesystem::rename(tmp, config_.outbox, ec);
  }
  if (ec) throw StoreError("IO_ERROR", "cannot rewrite outbox " + config_.outbox.string() + ": " + ec.message());
  return delivered;
}

std::unique_ptr<ResultSink> make_sink(const SinkConfig& config, const Clock& clock) {
  return std::visit(
      [&](const auto& params) -> std::unique_ptr<ResultSink> {
        using T = std::decay_t<decltype(params)>;
        if constexpr (std::is_same_v<T, FileSinkConfig>) {
          return std::make_unique<FileSink>(params, clock);
        } else if constexpr (std::is_same_v<T, HttpSinkConfig>) {
          return std::make_unique<HttpSink>(params, clock);
        } else {
          return std::make_unique<MemorySink>(clock);
        }
      },
      config.params);
}

std::vector<ResultEnvelope> export_results(const ResultSink& sink, const ExportFilter& filter) {
  std::vector<ResultEnvelope> out;
  std::set<std::string> seen;
  for (auto& env : sink.snapshot()) {
    if (!filter.matches(env) || !seen.insert(env.envelope_id).second) continue;
    out.push_back(std::move(env));
  }
  std::stable_sort(out.begin(), out.end(), [](const ResultEnvelope& a, const ResultEnvelope& b) {
    return std::tie(a.completed_at, a.envelope_id) < std::tie(b.completed_at, b.envelope_id);
  });
  return out;
}

}  // namespace visurvey
