#pragma once

#include <atomic>
#include <chrono>
#include <string>
#include <string_view>

namespace visurvey {

/// UTC instant at one-second resolution. All persisted and wire timestamps
/// use this type and the "YYYY-MM-DDTHH:MM:SSZ" text form.
using Timestamp = std::chrono::sys_seconds;
using Duration = std::chrono::seconds;

std::string format_timestamp(Timestamp t);

/// Parses RFC 3339 text. Offsets other than Z are accepted and normalized.
/// Throws ParseError("BAD_TIMESTAMP") on malformed input.
Timestamp parse_timestamp(std::string_view text);

/// Compact durations such as "30m", "24h", "1h30m", "45s", "2d".
/// Throws ParseError("BAD_DURATION").
Duration parse_duration(std::string_view text);
std::string format_duration(Duration d);

class Clock {
public:
  virtual ~Clock() = default;
  virtual Timestamp now() const = 0;
};

class SystemClock final : public Clock {
public:
  Timestamp now() const override;
};

/// Settable clock for tests and simulated timelines.
class ManualClock final : public Clock {
public:
  explicit ManualClock(Timestamp start) : now_(start.time_since_epoch().count()) {}

  Timestamp now() const override { return Timestamp{Duration{now_.load()}}; }
  void set(Timestamp t) { now_.store(t.time_since_epoch().count()); }
  void advance(Duration d) { now_.fetch_add(d.count()); }

private:
  std::atomic<Duration::rep> now_;
};

}  // namespace visurvey
