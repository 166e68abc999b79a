#pragma once

#include <stdexcept>
#include <string>

namespace opskill {

/// Base of every error raised by the library. Callers that only need to know
/// "something in the data was wrong" can catch this one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class OrderError : public Error {
public:
    using Error::Error;
};

class BoundsError : public Error {
public:
    using Error::Error;
};

class DuplicateTrialError : public Error {
public:
    using Error::Error;
};

class EmptyInputError : public Error {
public:
    using Error::Error;
};

class NonPositiveDurationError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

class DegenerateError : public Error {
public:
    using Error::Error;
};

class MissingRatingsError : public Error {
public:
    using Error::Error;
};

class NoOccurrenceError : public Error {
public:
    using Error::Error;
};

class InsufficientExperiencesError : public Error {
public:
    using Error::Error;
};

class EmptySelectionError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace opskill
