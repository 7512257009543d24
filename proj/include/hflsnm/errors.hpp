#pragma once

#include <stdexcept>
#include <string>

namespace hflsnm {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad configuration values (invalid ranges, malformed files). Maps to CLI exit 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Bad arguments to a library call (unknown client id, out-of-bounds value).
class ArgumentError : public Error {
public:
    using Error::Error;
};

// A requested constraint cannot be met (e.g. coverage target above the attainable maximum).
class ConstraintError : public Error {
public:
    using Error::Error;
};

// A scheduling/allocation instance admits no feasible point.
class InfeasibleError : public Error {
public:
    InfeasibleError(const std::string& msg, int client_id)
        : Error(msg), client_id(client_id) {}
    int client_id;
};

// A client cannot be associated with any edge server.
class AssocError : public Error {
public:
    AssocError(const std::string& msg, int client_id)
        : Error(msg), client_id(client_id) {}
    int client_id;
};

// The capacity equation has no admissible solution.
class CapacityError : public Error {
public:
    using Error::Error;
};

// An exhaustive oracle was asked to enumerate an instance beyond its size limit.
class SizeError : public Error {
public:
    using Error::Error;
};

// Candidate generation produced no admissible selection.
class SelectionError : public Error {
public:
    using Error::Error;
};

// A numerical routine failed to converge. Never expected on feasible inputs.
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace hflsnm
