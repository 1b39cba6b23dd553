#pragma once

#include <stdexcept>
#include <string>

namespace kbm {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A precondition on an argument's mathematical domain was violated.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(what) {}
};

/// Invalid argument at the interface level (bad sizes, mismatched grids, ...).
class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& what) : Error(what) {}
};

/// The explicit part of a splitting scheme blew up; retry with a smaller step.
class StabilityError : public Error {
public:
    StabilityError(const std::string& what, double suggested_dt)
        : Error(what), suggested_dt(suggested_dt) {}
    double suggested_dt;
};

/// Something that the numerical analysis says cannot happen, happened.
class InternalError : public Error {
public:
    explicit InternalError(const std::string& what) : Error(what) {}
};

} // namespace kbm
