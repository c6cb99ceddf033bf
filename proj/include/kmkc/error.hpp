#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kmkc {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree (inner dimensions, row counts, vector lengths).
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A precondition on an argument value is violated (out-of-range label, q > n, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Input bytes do not follow the expected container layout (bad magic, bad tag).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Input ended before the declared payload was read.
class TruncatedInput : public Error {
public:
    using Error::Error;
};

/// Stored checksum does not match the payload.
class IntegrityError : public Error {
public:
    using Error::Error;
};

/// Input has no direction after centering (constant image, flat spectrum).
class DegenerateInput : public Error {
public:
    using Error::Error;
};

/// Every patch of an image was degenerate, so no vote could be cast.
class Unclassifiable : public Error {
public:
    using Error::Error;
};

/// The factorization met a pivot that is zero to working precision.
class SingularMatrix : public Error {
public:
    SingularMatrix(std::size_t pivot, const std::string& detail)
        : Error(detail), pivot_(pivot) {}

    [[nodiscard]] std::size_t pivot() const noexcept { return pivot_; }

private:
    std::size_t pivot_;
};

}  // namespace kmkc
