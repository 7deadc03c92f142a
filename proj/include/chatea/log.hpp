#pragma once

#include <cstdarg>
#include <cstdio>

namespace chatea {

enum class LogLevel { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

inline LogLevel& log_threshold() {
    static LogLevel level = LogLevel::Info;
    return level;
}

inline void vlog(LogLevel level, const char* tag, const char* fmt, std::va_list args) {
    if (level < log_threshold()) return;
    std::fprintf(stderr, "[chatea %s] ", tag);
    std::vfprintf(stderr, fmt, args);
    std::fputc('\n', stderr);
}

inline void log_info(const char* fmt, ...) {
    std::va_list args;
    va_start(args, fmt);
    vlog(LogLevel::Info, "info", fmt, args);
    va_end(args);
}

inline void log_warn(const char* fmt, ...) {
    std::va_list args;
    va_start(args, fmt);
    vlog(LogLevel::Warn, "warn", fmt, args);
    va_end(args);
}

inline void log_error(const char* fmt, ...) {
    std::va_list args;
    va_start(args, fmt);
    vlog(LogLevel::Error, "error", fmt, args);
    va_end(args);
}

}  // namespace chatea
