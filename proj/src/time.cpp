#include "visurvey/time.hpp"

#include "visurvey/error.hpp"

#include <absl/time/time.h>

#include <cctype>
#include <string>

namespace visurvey {

std::string format_timestamp(Timestamp t) {
  return absl::FormatTime("%Y-%m-%dT%H:%M:%SZ", absl::FromChrono(t), absl::UTCTimeZone());
}

Timestamp parse_timestamp(std::string_view text) {
  absl::Time parsed;
  std::string err;
  if (!absl::ParseTime(absl::RFC3339_full, std::string(text), absl::UTCTimeZone(), &parsed, &err)) {
    throw ParseError("BAD_TIMESTAMP", "", "invalid timestamp '" + std::string(text) + "': " + err);
  }
  return std::chrono::time_point_cast<Duration>(absl::ToChronoTime(parsed));
}

Duration parse_duration(std::string_view text) {
  auto fail = [&] {
    return ParseError("BAD_DURATION", "", "invalid duration '" + std::string(text) + "'");
  };
  if (text.empty()) throw fail();
  Duration total{0};
  std::size_t i = 0;
  while (i < text.size()) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) throw fail();
    long long value = 0;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
      value = value * 10 + (text[i] - '0');
      if (value > 1'000'000'000LL) throw fail();
      ++i;
    }
    if (i == text.size()) throw fail();
    switch (text[i++]) {
      case 'd': total += std::chrono::days{value}; break;
      case 'h': total += std::chrono::hours{value}; break;
      case 'm': total += std::chrono::minutes{value}; break;
      case 's': total += std::chrono::seconds{value}; break;
      default: throw fail();
    }
  }
  return total;
}

std::string format_duration(Duration d) {
  if (d.count() == 0) return "0s";
  std::string out;
  auto secs = d.count();
  if (secs < 0) {
    out += "-";
    secs = -secs;
  }
  const auto emit = [&](long long unit, char suffix) {
    if (secs >= unit) {
      out += std::to_string(secs / unit);
      out += suffix;
      secs %= unit;
    }
  };
  emit(86400, 'd');
  emit(3600, 'h');
  emit(60, 'm');
  emit(1, 's');
  return out;
}

Timestamp SystemClock::now() const {
  return std::chrono::time_point_cast<Duration>(std::chrono::system_clock::now());
}

}  // namespace visurvey
