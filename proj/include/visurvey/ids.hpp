#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <random>
#include <string>

namespace visurvey {

/// Source of opaque, URL-safe identifiers for sessions.
class IdSource {
public:
  virtual ~IdSource() = default;
  virtual std::string next(const std::string& prefix) = 0;
};

/// "<prefix>-000001", "<prefix>-000002", ... Reproducible; used by golden tests.
class SequentialIds final : public IdSource {
public:
  std::string next(const std::string& prefix) override;

private:
  std::atomic<std::uint64_t> counter_{0};
};

/// "<prefix>-" followed by 16 random hex digits.
class RandomIds final : public IdSource {
public:
  RandomIds();
  explicit RandomIds(std::uint64_t seed) : engine_(seed) {}
  std::string next(const std::string& prefix) override;

private:
  std::mutex mutex_;
  std::mt19937_64 engine_;
};

/// 64-bit FNV-1a, used for short deterministic identifiers.
std::uint64_t fnv1a64(const std::string& data);
std::string hex64(std::uint64_t value);

}  // namespace visurvey
