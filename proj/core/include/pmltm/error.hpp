#pragma once

#include <stdexcept>
#include <string>

namespace pmltm {

/// Base for every error raised by the library. The CLI maps the concrete
/// type onto its exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A numerical routine produced a non-finite value or a non-PD system.
class NumericalFailure : public Error {
public:
    using Error::Error;
};

/// Every restart of a fit failed.
class FitFailure : public Error {
public:
    using Error::Error;
};

/// Every grid cell failed.
class SelectionFailure : public Error {
public:
    using Error::Error;
};

class IngestFailure : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class Unsupported : public Error {
public:
    using Error::Error;
};

}  // namespace pmltm
