#pragma once

#include <stdexcept>
#include <string>

namespace hipandas {

inline constexpr const char* kVersion = "0.1.0";

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Shape or ratio mismatch between operands.
class DimError : public Error {
public:
    explicit DimError(const std::string& msg) : Error(msg) {}
};

/// Malformed file content (bad magic, truncated payload, non-finite values).
class FormatError : public Error {
public:
    explicit FormatError(const std::string& msg) : Error(msg) {}
};

/// Invalid configuration (bad ranks, missing files, inconsistent ratios).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// Degenerate numeric state (all-zero input to a ratio, non-finite loss).
class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

} // namespace hipandas
