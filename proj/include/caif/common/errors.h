#pragma once

#include <stdexcept>
#include <string>

namespace caif
{

/// Violated precondition of an operation (wrong shapes, empty inputs, ...).
class ContractError : public std::logic_error
{
public:
	using std::logic_error::logic_error;
};

/// Invalid or inconsistent configuration, including missing model components.
class ConfigError : public std::runtime_error
{
public:
	using std::runtime_error::runtime_error;
};

/// An operation was called in a state that does not accept it, e.g. stepping a finished episode.
class UsageError : public std::logic_error
{
public:
	using std::logic_error::logic_error;
};

/// Training produced a non-finite loss and was aborted.
class DivergenceError : public std::runtime_error
{
public:
	using std::runtime_error::runtime_error;
};

} // namespace caif
