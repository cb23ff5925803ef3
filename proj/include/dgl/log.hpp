#pragma once

namespace dgl {

// Log verbosity, selected once per process from DELAUNAY_GLUE_LOG
// (error|info|debug, default error).
enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

LogLevel log_level();

void log_error(const char* fmt, ...);
void log_info(const char* fmt, ...);
void log_debug(const char* fmt, ...);

} // namespace dgl
