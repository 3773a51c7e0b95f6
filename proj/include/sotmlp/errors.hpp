#pragma once

#include <stdexcept>
#include <string>

namespace sotmlp {

// Error categories map to CLI exit codes: config -> 2, data -> 3, runtime -> 4.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Argument outside its mathematical domain (theta out of [0,pi], x out of [0,1], ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Vector/matrix shape mismatch.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Value fails a contract check (non-binary weight, label > 9, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Malformed byte stream (bad IDX magic, truncated payload, corrupt checkpoint).
class FormatError : public Error {
public:
    using Error::Error;
};

// Bad experiment configuration (unknown key, unparsable value, invalid range).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Dataset-level failure (missing file, image/label count mismatch).
class DataError : public Error {
public:
    using Error::Error;
};

// Degenerate device parameters make the analog calibration impossible.
class CalibrationError : public Error {
public:
    using Error::Error;
};

} // namespace sotmlp
