#pragma once

#include <stdexcept>
#include <string>

namespace horizon {

// Error taxonomy shared by all modules. The CLI maps these onto exit codes
// (config 2, protocol 3, range 4); everything else is a plain failure.

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Config-file syntax problems; carries a line number in the message.
struct ParseError : ConfigError {
    using ConfigError::ConfigError;
};

// An operation was invoked in a state that the rollout protocol forbids
// (out-of-order commands, non-consecutive frame indices, flush on empty...).
struct ProtocolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A coordinate left the representable horizon and the caller did not force it.
struct RangeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A scalar argument outside its mathematical domain (e.g. timestep not in [0,1]).
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace horizon
