#pragma once

#include <stdexcept>
#include <string>

namespace impact_game {

/// Base class for everything thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad inputs: parameter ranges, vector lengths, config files.
class ValidationError : public Error {
public:
    using Error::Error;
};

class LengthMismatch : public ValidationError {
public:
    LengthMismatch(const std::string& field, std::size_t got, std::size_t want)
        : ValidationError("length mismatch for '" + field + "': got " + std::to_string(got) +
                          ", expected " + std::to_string(want)) {}
};

class NonPositive : public ValidationError {
public:
    explicit NonPositive(const std::string& field)
        : ValidationError("parameter '" + field + "' violates its sign constraint") {}
};

class Assumption32Violated : public ValidationError {
public:
    explicit Assumption32Violated(int t)
        : ValidationError("Assumption 3.2 violated at t=" + std::to_string(t) +
                          ": alpha_t*exp(-resilience) + beta_t must be < 1"),
          time(t) {}
    int time;
};

class InvalidParameter : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// The solver or an oracle hit a state it cannot handle numerically.
class NumericalError : public Error {
public:
    using Error::Error;
};

class ConcavityLost : public NumericalError {
public:
    ConcavityLost(int t, int trader)
        : NumericalError("stage objective not strictly concave (A <= 0) at t=" + std::to_string(t) +
                         " for trader " + std::to_string(trader + 1)),
          time(t), trader(trader) {}
    int time;
    int trader;
};

class SingularEquilibrium : public NumericalError {
public:
    explicit SingularEquilibrium(int t)
        : NumericalError("best-response system singular (zeta ~ 0) at t=" + std::to_string(t)),
          time(t) {}
    int time;
};

class NotPositiveDefinite : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NoConvergence : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class BracketFailure : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class IntegrandOverflow : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class InventoryLeak : public NumericalError {
public:
    InventoryLeak(std::size_t path, int trader, double residual)
        : NumericalError("inventory not fully unwound on path " + std::to_string(path) +
                         " for trader " + std::to_string(trader + 1) + " (|Q|=" +
                         std::to_string(residual) + ")") {}
};

class TimeOutOfRange : public Error {
public:
    TimeOutOfRange(int t, int horizon)
        : Error("time index " + std::to_string(t) + " outside {1,...," + std::to_string(horizon) + "}") {}
};

class EmptySample : public Error {
public:
    EmptySample() : Error("cannot summarize an empty sample") {}
};

class ParseError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace impact_game
