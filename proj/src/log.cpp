#include "fsdag/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string_view>

namespace fsdag {

namespace {

LogLevel from_env() {
  const char* env = std::getenv("FSDAG_LOG");
  if (!env) return LogLevel::kInfo;
  const std::string_view v(env);
  if (v == "quiet" || v == "off") return LogLevel::kQuiet;
  if (v == "error") return LogLevel::kError;
  if (v == "warn") return LogLevel::kWarn;
  if (v == "debug") return LogLevel::kDebug;
  return LogLevel::kInfo;
}

std::atomic<int>& level_slot() {
  static std::atomic<int> level{static_cast<int>(from_env())};
  return level;
}

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

LogLevel log_level() { return static_cast<LogLevel>(level_slot().load(std::memory_order_relaxed)); }

void set_log_level(LogLevel level) { level_slot().store(static_cast<int>(level)); }

void log_message(LogLevel level, const std::string& message) {
  static constexpr const char* kTags[] = {"", "error", "warn", "info", "debug"};
  std::lock_guard lock(sink_mutex());
  std::cerr << "[fsdag " << kTags[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace fsdag
