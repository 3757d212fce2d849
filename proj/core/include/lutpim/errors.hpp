#pragma once

#include <stdexcept>
#include <string>

namespace lutpim {

/// Base class for every error raised by the simulator.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A requested operation (function table, precision, layer kind) is not supported.
class UnsupportedOperation : public Error {
public:
    using Error::Error;
};

/// A structure is malformed: wrong word count, bad microprogram, bad config.
class StructuralError : public Error {
public:
    using Error::Error;
};

/// A LUT core was looked up before any function table was loaded.
class UseBeforeProgram : public Error {
public:
    using Error::Error;
};

/// An argument is outside its admissible domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A 32-bit cluster accumulator would overflow. The simulation halts.
class AccumulatorOverflow : public Error {
public:
    using Error::Error;
};

/// Shapes do not chain or do not match stored tensors.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A file could not be parsed (bad magic, truncation, unknown version, bad syntax).
class FormatError : public Error {
public:
    using Error::Error;
};

/// A file could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace lutpim
