#pragma once

// Thin logging front end. The backend lives in its own translation unit because the fmt
// headers bundled with libtorch and the ones the system logger was built against differ.

#include <fmt/format.h>

#include <string_view>
#include <utility>

namespace caif::log
{

enum class Level
{
	debug,
	info,
	warn,
	error,
	off,
};

void write(Level level, std::string_view message);
void set_level(Level level);
/// Accepts debug, info, warn, error, off.
Level parse_level(std::string_view name);

template <typename... Args>
void debug(fmt::format_string<Args...> format, Args&&... args)
{
	write(Level::debug, fmt::format(format, std::forward<Args>(args)...));
}

template <typename... Args>
void info(fmt::format_string<Args...> format, Args&&... args)
{
	write(Level::info, fmt::format(format, std::forward<Args>(args)...));
}

template <typename... Args>
void warn(fmt::format_string<Args...> format, Args&&... args)
{
	write(Level::warn, fmt::format(format, std::forward<Args>(args)...));
}

template <typename... Args>
void error(fmt::format_string<Args...> format, Args&&... args)
{
	write(Level::error, fmt::format(format, std::forward<Args>(args)...));
}

} // namespace caif::log
