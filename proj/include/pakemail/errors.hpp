#pragma once

#include <stdexcept>
#include <string>

namespace pakemail {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or non-canonical input bytes.
class DecodeError : public Error {
public:
    using Error::Error;
};

/// Precondition on an argument violated (empty password, bad length, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Operation invoked in the wrong protocol phase.
class StateError : public Error {
public:
    using Error::Error;
};

/// Failure inside a transport backend. `retriable()` is true when the
/// envelope was not handed off and the same call may be repeated.
class TransportError : public Error {
public:
    TransportError(const std::string& what, bool retriable)
        : Error(what), retriable_(retriable) {}
    bool retriable() const { return retriable_; }

private:
    bool retriable_;
};

class UnreachableError : public TransportError {
public:
    explicit UnreachableError(const std::string& what) : TransportError(what, true) {}
};

}  // namespace pakemail
