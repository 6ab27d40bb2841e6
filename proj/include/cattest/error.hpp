#pragma once

#include <stdexcept>
#include <string>

namespace cattest {

/// Raised for malformed inputs: length mismatches, out-of-range codes,
/// degenerate cardinalities, empty tables.
class InputError : public std::invalid_argument {
public:
    explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised by the exact enumerator when an instance is too large to enumerate.
class GuardError : public std::length_error {
public:
    explicit GuardError(const std::string& what) : std::length_error(what) {}
};

} // namespace cattest
