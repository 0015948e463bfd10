#pragma once

#include <stdexcept>
#include <string>

namespace gridstab {

/// Base class for all gridstab errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// -- network construction --------------------------------------------------
class NotConnectedError : public Error {
public:
    using Error::Error;
};
class NotRadialError : public Error {
public:
    using Error::Error;
};
class NoSubstationError : public Error {
public:
    explicit NoSubstationError(const std::string& msg, int line = 0)
        : Error(msg), line(line) {}
    int line;
};
class UnknownBusError : public Error {
public:
    using Error::Error;
};
class SingularMatrixError : public Error {
public:
    using Error::Error;
};

// -- power flow / fixed point ----------------------------------------------
class NonConvergenceError : public Error {
public:
    NonConvergenceError(const std::string& msg, int iterations)
        : Error(msg), iterations(iterations) {}
    int iterations;
};

// -- inverter / stability ----------------------------------------------------
class MuSaturatedError : public Error {
public:
    using Error::Error;
};
class CannotStabilizeError : public Error {
public:
    using Error::Error;
};
class InsufficientHistoryError : public Error {
public:
    using Error::Error;
};

// -- simulator events --------------------------------------------------------
class UnknownParameterError : public Error {
public:
    using Error::Error;
};
class NotAnInverterBusError : public Error {
public:
    using Error::Error;
};

// -- ingest -------------------------------------------------------------------
/// Parser error carrying the 1-based line number of the offending input.
class SyntaxError : public Error {
public:
    SyntaxError(const std::string& msg, int line)
        : Error(msg + " (line " + std::to_string(line) + ")"), line(line) {}
    int line;
};
class MissingSectionError : public Error {
public:
    MissingSectionError(const std::string& msg, int line)
        : Error(msg + " (line " + std::to_string(line) + ")"), line(line) {}
    int line;
};
class MultipleSlackBusesError : public Error {
public:
    MultipleSlackBusesError(const std::string& msg, int line)
        : Error(msg + " (line " + std::to_string(line) + ")"), line(line) {}
    int line;
};
class NonRadialCaseError : public Error {
public:
    NonRadialCaseError(const std::string& msg, int line)
        : Error(msg + " (line " + std::to_string(line) + ")"), line(line) {}
    int line;
};
class DegenerateKnotsError : public Error {
public:
    using Error::Error;
};
class OutOfRangeError : public Error {
public:
    using Error::Error;
};

}  // namespace gridstab
