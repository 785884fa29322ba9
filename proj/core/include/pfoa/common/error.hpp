#pragma once

#include <stdexcept>
#include <string>

namespace pfoa {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed user input: bad labels, out-of-range grades, mismatched lengths.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Invalid or infeasible configuration values.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Tensor/array dimension mismatch. Messages name both shapes.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Degenerate geometry: collinear landmarks, undersized ROI boxes.
class GeometryError : public Error {
public:
    using Error::Error;
};

/// Feature schema mismatch between a model and the data handed to it.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Metric preconditions violated (e.g. single-class label vector).
class MetricError : public Error {
public:
    using Error::Error;
};

/// File system / serialization failures.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace pfoa
