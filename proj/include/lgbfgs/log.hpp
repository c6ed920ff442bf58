#pragma once

#include <cstdlib>
#include <iostream>
#include <string>
#include <string_view>

namespace lgbfgs::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

/// Threshold read once from LGBFGS_LOG_LEVEL (debug|info|warn|error|off); default warn.
inline Level threshold() {
  static const Level level = [] {
    const char* env = std::getenv("LGBFGS_LOG_LEVEL");
    if (env == nullptr) return Level::warn;
    const std::string_view v(env);
    if (v == "debug") return Level::debug;
    if (v == "info") return Level::info;
    if (v == "error") return Level::error;
    if (v == "off") return Level::off;
    return Level::warn;
  }();
  return level;
}

inline void write(Level level, std::string_view msg) {
  if (level < threshold()) return;
  static constexpr const char* tags[] = {"debug", "info", "warn", "error"};
  std::clog << "[lgbfgs " << tags[static_cast<int>(level)] << "] " << msg << '\n';
}

inline void debug(std::string_view msg) { write(Level::debug, msg); }
inline void info(std::string_view msg) { write(Level::info, msg); }
inline void warn(std::string_view msg) { write(Level::warn, msg); }

}  // namespace lgbfgs::log
