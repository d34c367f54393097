#pragma once

#include <stdexcept>
#include <string>

namespace ademu {

/// Base class for every error raised by the emulator library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A fixed-point value does not fit its declared format.
class FormatError : public Error {
public:
    using Error::Error;
};

/// A caller broke an operation's precondition (non-monotone time, skipped edge, ...).
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// Malformed external input (CSV rows, JSON documents).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Invalid or inconsistent configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace ademu
