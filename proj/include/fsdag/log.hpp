#pragma once

#include <sstream>
#include <string>

namespace fsdag {

enum class LogLevel { kQuiet = 0, kError = 1, kWarn = 2, kInfo = 3, kDebug = 4 };

/// Level from FSDAG_LOG (quiet|error|warn|info|debug), read once; default info.
LogLevel log_level();
void set_log_level(LogLevel level);
void log_message(LogLevel level, const std::string& message);

template <typename... Args>
void log_at(LogLevel level, const Args&... args) {
  if (static_cast<int>(level) > static_cast<int>(log_level())) return;
  std::ostringstream os;
  (os << ... << args);
  log_message(level, os.str());
}

template <typename... Args>
void log_info(const Args&... args) {
  log_at(LogLevel::kInfo, args...);
}

template <typename... Args>
void log_debug(const Args&... args) {
  log_at(LogLevel::kDebug, args...);
}

template <typename... Args>
void log_warn(const Args&... args) {
  log_at(LogLevel::kWarn, args...);
}

}  // namespace fsdag
