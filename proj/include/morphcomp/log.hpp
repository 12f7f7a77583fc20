#pragma once

#include <cstdlib>
#include <iostream>
#include <string>
#include <string_view>

namespace morphcomp {

enum class LogLevel { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

// Level read once from MORPHCOMP_LOG (debug|info|warn|error|off), default warn.
inline LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("MORPHCOMP_LOG");
        if (env == nullptr) return LogLevel::Warn;
        std::string_view v(env);
        if (v == "debug") return LogLevel::Debug;
        if (v == "info") return LogLevel::Info;
        if (v == "warn") return LogLevel::Warn;
        if (v == "error") return LogLevel::Error;
        if (v == "off") return LogLevel::Off;
        return LogLevel::Warn;
    }();
    return level;
}

inline void log(LogLevel level, const std::string& msg) {
    if (level < log_level()) return;
    static const char* names[] = {"DEBUG", "INFO", "WARN", "ERROR"};
    std::cerr << "[" << names[static_cast<int>(level)] << "] " << msg << "\n";
}

}  // namespace morphcomp
