#pragma once

#include <stdexcept>
#include <string>

namespace fg {

// Configuration or precondition violation the caller can fix (CLI exit code 1).
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class DimensionError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class RankError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ConfigError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Failures discovered while processing data (CLI exit code 2).
class RuntimeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericError : public RuntimeError {
public:
    using RuntimeError::RuntimeError;
};

class DataError : public RuntimeError {
public:
    using RuntimeError::RuntimeError;
};

class AlignmentError : public DataError {
public:
    using DataError::DataError;
};

class LookupError : public RuntimeError {
public:
    using RuntimeError::RuntimeError;
};

class SplitError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class TrainingError : public RuntimeError {
public:
    using RuntimeError::RuntimeError;
};

}  // namespace fg
