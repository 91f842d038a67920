#pragma once

#include <stdexcept>
#include <string>

namespace spill {

/// Bad input: malformed files, violated preconditions, invalid configuration.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Filesystem read/write failure.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Failure talking to a remote selector endpoint.
class RemoteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A model reply that does not follow the answer format.
class ReplyParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace spill
