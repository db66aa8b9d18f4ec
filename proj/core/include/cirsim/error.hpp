#pragma once

#include <stdexcept>
#include <string>

namespace cirsim {

// Raised when an input violates a documented precondition (non-positive
// parameters, misaligned steps, out-of-range ticks, ...). The CLI maps this to
// exit code 2.
class ParameterError : public std::invalid_argument {
public:
    explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

// Raised when a formula is evaluated outside its mathematical domain, e.g. the
// transformed drift at y = 0 or the untruncated Euler scheme at x < 0.
class DomainError : public std::domain_error {
public:
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

}  // namespace cirsim
