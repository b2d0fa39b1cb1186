#pragma once

#include <stdexcept>
#include <string>

namespace evrp {

// Malformed input file. `position` is a byte offset for binary inputs and a
// 1-based line number for text inputs; -1 when not applicable.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg, long long position = -1)
        : std::runtime_error(msg), position_(position) {}

    long long position() const noexcept { return position_; }

private:
    long long position_;
};

// Well-formed input that violates a domain invariant (geometry, ordering, ...).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad configuration (scene spec, pipeline parameters, CLI config file).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace evrp
