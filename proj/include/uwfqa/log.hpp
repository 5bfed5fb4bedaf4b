#pragma once

#include <string>
#include <string_view>

// Logging entry points usable from translation units that cannot include
// spdlog (the torch headers carry their own, incompatible fmt).
namespace uwfqa::log {

void info(std::string_view message);
void warn(std::string_view message);
void error(std::string_view message);

/// printf-style formatting into a std::string.
std::string printf(const char* format, ...) __attribute__((format(printf, 1, 2)));

}  // namespace uwfqa::log
