#pragma once

#include <stdexcept>
#include <string>

namespace pfsos {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidModel : public Error {
public:
    using Error::Error;
};

/// Fewer events than the target can ever be observed (cutoff date is infinite).
class InsufficientEvents : public Error {
public:
    using Error::Error;
};

/// The interim cutoff falls after the final cutoff.
class CutoffOrderViolation : public Error {
public:
    using Error::Error;
};

/// Events are present but the variance estimate is zero, or a required
/// statistic has no events at all.
class DegenerateVariance : public Error {
public:
    using Error::Error;
};

class InconsistentSnapshots : public Error {
public:
    using Error::Error;
};

class InvalidCorrelation : public Error {
public:
    using Error::Error;
};

class NoSolution : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace pfsos
