#pragma once

namespace trace::log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

// Active level comes from the TRACE_LOG env var (error|warn|info|debug),
// default warn. All output goes to stderr.
Level level();
void set_level(Level lvl);

void errorf(const char* fmt, ...);
void warnf(const char* fmt, ...);
void infof(const char* fmt, ...);
void debugf(const char* fmt, ...);

} // namespace trace::log
