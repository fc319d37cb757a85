#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace commonload {

/// Base class for every error raised by the library. Callers that only want
/// to distinguish "our" failures from everything else catch this.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A documented precondition was violated (bad count, out-of-range index...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class ConstantColumn : public Error {
public:
    explicit ConstantColumn(std::size_t index)
        : Error("column " + std::to_string(index) + " has zero standard deviation"),
          index_(index) {}
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

class AsymmetryExceedsTolerance : public Error {
public:
    explicit AsymmetryExceedsTolerance(double max_abs_diff)
        : Error("matrix asymmetry " + std::to_string(max_abs_diff) + " exceeds tolerance"),
          max_abs_diff_(max_abs_diff) {}
    double max_abs_diff() const noexcept { return max_abs_diff_; }

private:
    double max_abs_diff_;
};

class EigenFailure : public Error {
public:
    using Error::Error;
};

class RankDeficient : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class SegmentTooShort : public Error {
public:
    SegmentTooShort(std::size_t length, std::size_t required)
        : Error("segment of length " + std::to_string(length) + " is shorter than the required " +
                std::to_string(required)),
          length_(length), required_(required) {}
    std::size_t length() const noexcept { return length_; }
    std::size_t required() const noexcept { return required_; }

private:
    std::size_t length_;
    std::size_t required_;
};

class InvalidFactorOrder : public Error {
public:
    InvalidFactorOrder(std::size_t r1, std::size_t r2)
        : Error("second factor count r2=" + std::to_string(r2) + " exceeds r1=" + std::to_string(r1)) {}
};

class SingularLongRunVariance : public Error {
public:
    explicit SingularLongRunVariance(double condition_number)
        : Error("long-run variance is numerically singular (condition number " +
                std::to_string(condition_number) + ")"),
          condition_number_(condition_number) {}
    double condition_number() const noexcept { return condition_number_; }

private:
    double condition_number_;
};

class UnknownFamily : public Error {
public:
    explicit UnknownFamily(const std::string& name) : Error("unknown DGP family '" + name + "'") {}
};

class ParseError : public Error {
public:
    ParseError(std::size_t row, std::size_t col, const std::string& what)
        : Error("parse error at row " + std::to_string(row) + ", column " + std::to_string(col) + ": " +
                what),
          row_(row), col_(col) {}
    std::size_t row() const noexcept { return row_; }
    std::size_t col() const noexcept { return col_; }

private:
    std::size_t row_;
    std::size_t col_;
};

class RaggedRows : public Error {
public:
    RaggedRows(std::size_t row, std::size_t got, std::size_t expected)
        : Error("row " + std::to_string(row) + " has " + std::to_string(got) + " fields, expected " +
                std::to_string(expected)) {}
};

class EmptyFile : public Error {
public:
    using Error::Error;
};

}  // namespace commonload
