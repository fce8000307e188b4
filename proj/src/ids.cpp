#include "visurvey/ids.hpp"

#include <cstdio>

namespace visurvey {

std::string SequentialIds::next(const std::string& prefix) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06llu", static_cast<unsigned long long>(++counter_));
  return prefix + "-" + buf;
}

RandomIds::RandomIds() : engine_(std::random_device{}()) {}

std::string RandomIds::next(const std::string& prefix) {
  std::uint64_t value;
  {
    std::lock_guard lock(mutex_);
    value = engine_();
  }
  return prefix + "-" + hex64(value);
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace visurvey
