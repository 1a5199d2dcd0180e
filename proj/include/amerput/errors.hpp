#pragma once

#include <stdexcept>
#include <string>

namespace amerput {

/// Malformed or out-of-contract input (bad ordering, negative prices, broken model files).
class InputError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Data that is well formed but violates a no-arbitrage requirement.
class InconsistencyError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A strategy builder was asked for a trade whose precondition does not hold.
class NotApplicable : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// An invariant that should hold by construction was broken (usually tolerance breakdown).
class InternalError : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

#define AMERPUT_REQUIRE(cond, ErrorType, msg)                                  \
    do {                                                                       \
        if (!(cond))                                                           \
            throw ErrorType(std::string(msg));                                 \
    } while (false)

} // namespace amerput
