#include "trace/log.hpp"

#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace trace::log {

namespace {

Level parse_env() {
    const char* env = std::getenv("TRACE_LOG");
    if (env == nullptr) return Level::warn;
    if (std::strcmp(env, "error") == 0) return Level::error;
    if (std::strcmp(env, "warn") == 0) return Level::warn;
    if (std::strcmp(env, "info") == 0) return Level::info;
    if (std::strcmp(env, "debug") == 0) return Level::debug;
    return Level::warn;
}

Level& active_level() {
    static Level lvl = parse_env();
    return lvl;
}

const char* tag(Level lvl) {
    switch (lvl) {
    case Level::error: return "error";
    case Level::warn: return "warn";
    case Level::info: return "info";
    case Level::debug: return "debug";
    }
    return "?";
}

void vwrite(Level lvl, const char* fmt, va_list ap) {
    if (lvl > active_level()) return;
    std::fprintf(stderr, "[trace:%s] ", tag(lvl));
    std::vfprintf(stderr, fmt, ap);
    std::fputc('\n', stderr);
}

} // namespace

Level level() { return active_level(); }
void set_level(Level lvl) { active_level() = lvl; }

#define TRACE_LOG_IMPL(name, lvl)                                                                  \
    void name(const char* fmt, ...) {                                                             \
        va_list ap;                                                                                \
        va_start(ap, fmt);                                                                         \
        vwrite(lvl, fmt, ap);                                                                      \
        va_end(ap);                                                                                \
    }

TRACE_LOG_IMPL(errorf, Level::error)
TRACE_LOG_IMPL(warnf, Level::warn)
TRACE_LOG_IMPL(infof, Level::info)
TRACE_LOG_IMPL(debugf, Level::debug)

#undef TRACE_LOG_IMPL

} // namespace trace::log
