#pragma once

// Minimal stderr logger. The level is read once from the KBPOT_LOG
// environment variable (error|warn|info|debug); default is warn.

#include <cstdio>
#include <cstdlib>
#include <string>
#include <string_view>

namespace kbpot::log {

enum class Level : int { Error = 0, Warn = 1, Info = 2, Debug = 3 };

inline Level level() {
  static const Level lv = [] {
    const char* env = std::getenv("KBPOT_LOG");
    if (env == nullptr) return Level::Warn;
    const std::string_view v(env);
    if (v == "error") return Level::Error;
    if (v == "warn") return Level::Warn;
    if (v == "info") return Level::Info;
    if (v == "debug") return Level::Debug;
    return Level::Warn;
  }();
  return lv;
}

inline void emit(Level lv, std::string_view tag, std::string_view msg) {
  if (static_cast<int>(lv) > static_cast<int>(level())) return;
  std::fprintf(stderr, "[kbpot] %.*s: %.*s\n", static_cast<int>(tag.size()), tag.data(),
               static_cast<int>(msg.size()), msg.data());
}

inline void error(std::string_view msg) { emit(Level::Error, "error", msg); }
inline void warn(std::string_view msg) { emit(Level::Warn, "warn", msg); }
inline void info(std::string_view msg) { emit(Level::Info, "info", msg); }
inline void debug(std::string_view msg) { emit(Level::Debug, "debug", msg); }

inline void error(std::string_view tag, std::string_view msg) { emit(Level::Error, tag, msg); }
inline void warn(std::string_view tag, std::string_view msg) { emit(Level::Warn, tag, msg); }
inline void info(std::string_view tag, std::string_view msg) { emit(Level::Info, tag, msg); }
inline void debug(std::string_view tag, std::string_view msg) { emit(Level::Debug, tag, msg); }

}  // namespace kbpot::log
