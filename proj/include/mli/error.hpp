#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mli {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IndexError : public Error {
public:
    using Error::Error;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class EmptyTableError : public Error {
public:
    using Error::Error;
};

/// Raised when a cell cannot be converted to the requested kind.
class CastError : public Error {
public:
    CastError(std::size_t row, std::size_t col, const std::string& what)
        : Error("cast error at row " + std::to_string(row) + ", column " + std::to_string(col) +
                ": " + what),
          row_(row),
          col_(col) {}

    std::size_t row() const noexcept { return row_; }
    std::size_t col() const noexcept { return col_; }

private:
    std::size_t row_;
    std::size_t col_;
};

/// A user-supplied row function threw; carries the logical row index.
class UserFunctionError : public Error {
public:
    UserFunctionError(std::size_t row, const std::string& what)
        : Error("user function failed on row " + std::to_string(row) + ": " + what), row_(row) {}

    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

/// A partition task failed; the round was aborted.
class PartitionError : public Error {
public:
    PartitionError(std::size_t partition, const std::string& what)
        : Error("partition " + std::to_string(partition) + " failed: " + what),
          partition_(partition) {}

    std::size_t partition() const noexcept { return partition_; }

private:
    std::size_t partition_;
};

class DimError : public Error {
public:
    using Error::Error;
};

class UnsupportedError : public Error {
public:
    using Error::Error;
};

class SingularMatrixError : public Error {
public:
    using Error::Error;
};

class DegenerateError : public Error {
public:
    using Error::Error;
};

class DivergenceError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace mli
