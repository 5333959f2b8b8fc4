#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace treexp {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A spliced increment value does not exist in the target step's alphabet.
struct AlphabetMismatch : Error {
    using Error::Error;
};

/// Conditioning on a node of probability zero.
struct NullPrefix : Error {
    using Error::Error;
};

/// A pasting kernel is missing at a positive-probability boundary node.
struct MissingKernel : Error {
    using Error::Error;
};

/// An enumeration would exceed the configured cap.
struct SizeLimit : Error {
    std::size_t requested = 0;
    std::size_t cap = 0;
    SizeLimit(const std::string& what, std::size_t requested_, std::size_t cap_)
        : Error(what), requested(requested_), cap(cap_) {}
    explicit SizeLimit(const std::string& what) : Error(what) {}
};

/// sigma <= tau required but violated.
struct PrecedenceViolation : Error {
    using Error::Error;
};

/// Invalid model specification (bad probability vector, bad grid, ...).
struct InvalidSpec : Error {
    using Error::Error;
};

/// A path map failed the stopping-time test; witnesses are path ranks.
struct NotStoppingRule : Error {
    std::size_t witness_a = 0;
    std::size_t witness_b = 0;
    NotStoppingRule(const std::string& what, std::size_t a, std::size_t b)
        : Error(what), witness_a(a), witness_b(b) {}
};

/// Configuration document rejected; `pointer` is a JSON pointer to the offending field.
struct ConfigError : Error {
    std::string pointer;
    ConfigError(std::string pointer_, const std::string& what)
        : Error(what + " (at " + pointer_ + ")"), pointer(std::move(pointer_)) {}
};

/// Report or tabular output could not be written.
struct IoFailure : Error {
    using Error::Error;
};

}  // namespace treexp
