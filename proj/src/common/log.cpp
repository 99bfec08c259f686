#include "caif/common/log.h"

#include <spdlog/spdlog.h>

#include <stdexcept>
#include <string>

namespace caif::log
{

namespace
{

spdlog::level::level_enum to_spdlog(Level level)
{
	switch (level)
	{
		case Level::debug: return spdlog::level::debug;
		case Level::info: return spdlog::level::info;
		case Level::warn: return spdlog::level::warn;
		case Level::error: return spdlog::level::err;
		case Level::off: return spdlog::level::off;
	}
	return spdlog::level::info;
}

} // namespace

void write(Level level, std::string_view message)
{
	spdlog::log(to_spdlog(level), "{}", message);
}

void set_level(Level level)
{
	spdlog::set_level(to_spdlog(level));
}

Level parse_level(std::string_view name)
{
	if (name == "debug")
	{
		return Level::debug;
	}
	if (name == "info")
	{
		return Level::info;
	}
	if (name == "warn")
	{
		return Level::warn;
	}
	if (name == "error")
	{
		return Level::error;
	}
	if (name == "off")
	{
		return Level::off;
	}
	throw std::invalid_argument("unknown log level '" + std::string(name) + "'");
}

} // namespace caif::log
