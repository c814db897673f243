#ifndef LOWRANKCV_ERRORS_HPP
#define LOWRANKCV_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace lowrankcv {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite or empty matrix input.
class InvalidMatrix : public Error {
public:
    using Error::Error;
};

/// Requested truncation rank exceeds the available rank.
class RankOutOfRange : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

/// Argument outside the domain of a formula or procedure.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Shift z makes (S22 - zI) numerically singular.
class SingularShift : public Error {
public:
    using Error::Error;
};

/// Eigenvalues are not strictly ordered.
class DegenerateSpectrum : public Error {
public:
    using Error::Error;
};

/// A masked matrix has no observed entries.
class NoData : public Error {
public:
    using Error::Error;
};

/// File could not be read or written.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace lowrankcv

#endif  // LOWRANKCV_ERRORS_HPP
