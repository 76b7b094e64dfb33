#ifndef CBANDIT_ERRORS_HPP
#define CBANDIT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cbandit {

// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad arguments or violated type invariants (unknown vertex, cyclic edge, ...).
struct DomainError : Error {
    using Error::Error;
};

// A size guard was exceeded (POMIS enumeration, exact-oracle state space, arm count).
struct CapacityError : Error {
    using Error::Error;
};

// Invalid run configuration (horizon too small, missing config key, bad parameter range).
struct ConfigError : Error {
    using Error::Error;
};

// Rejection sampling exhausted its retry budget while enforcing gap assumptions.
struct GenerationError : Error {
    using Error::Error;
};

// File or stream level problem (unreadable path, malformed line).
struct IoError : Error {
    using Error::Error;
};

} // namespace cbandit

#endif
