#pragma once

#include <stdexcept>
#include <string>

namespace todarsk {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An index or size argument lies outside its admissible range.
class RangeError : public Error {
public:
    using Error::Error;
};

/// An argument lies outside the mathematical domain of the operation
/// (e.g. a matrix that is not in the totally positive cell).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A leading principal minor vanished (relative to the pivot floor) during a
/// Gauss decomposition. For the Toda factorization flow this marks a blow-up.
class FactorizationBlowUp : public Error {
public:
    FactorizationBlowUp(int minor_index, double minor_value, double time = -1.0)
        : Error(make_message(minor_index, minor_value, time)),
          minor_index_(minor_index),
          minor_value_(minor_value),
          time_(time) {}

    /// 1-based order of the vanishing leading principal minor.
    int minor_index() const noexcept { return minor_index_; }
    double minor_value() const noexcept { return minor_value_; }
    /// Flow time at which the factorization failed; negative when unknown.
    double time() const noexcept { return time_; }

private:
    static std::string make_message(int k, double v, double t) {
        std::string msg = "leading principal minor " + std::to_string(k) +
                          " vanishes (value " + std::to_string(v) + ")";
        if (t >= 0.0) msg += " at t=" + std::to_string(t);
        return msg;
    }

    int minor_index_;
    double minor_value_;
    double time_;
};

/// Floating-point overflow, or a triangle entry beyond the exp-safe range.
class OverflowError : public Error {
public:
    explicit OverflowError(const std::string& what, double time = -1.0)
        : Error(what), time_(time) {}

    /// Time of the overflow for trajectory producers; negative otherwise.
    double time() const noexcept { return time_; }

private:
    double time_;
};

class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// The Kostant system has no solution: the spectrum of M differs from lambda.
class SpectrumError : public Error {
public:
    using Error::Error;
};

/// Repeated nodes in a formula that needs pairwise distinct nodes.
class DegenerateNodes : public Error {
public:
    using Error::Error;
};

/// A rejection sampler fell below its minimum acceptance rate.
class EfficiencyError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace todarsk
