#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace speedclust {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data. The CLI maps these to exit code 3.
class DataError : public Error {
  public:
    using Error::Error;
};

/// An algorithm was asked to run outside its domain. The CLI maps these to exit code 4.
class PreconditionError : public Error {
  public:
    using Error::Error;
};

class ParseError : public DataError {
  public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : DataError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

class InvalidBucket : public DataError {
  public:
    using DataError::DataError;
};

class DuplicateAttributeKey : public DataError {
  public:
    using DataError::DataError;
};

class InvalidSpec : public DataError {
  public:
    using DataError::DataError;
};

class EmptySeries : public PreconditionError {
  public:
    EmptySeries() : PreconditionError("series has no observed values") {}
    explicit EmptySeries(std::size_t index)
        : PreconditionError("series " + std::to_string(index) + " has no observed values"),
          index_(index) {}

    /// Position of the offending series in a batch, if known.
    std::size_t index() const noexcept { return index_; }

  private:
    std::size_t index_ = static_cast<std::size_t>(-1);
};

class TooFewSeries : public PreconditionError {
  public:
    using PreconditionError::PreconditionError;
};

class TooFewProfiles : public PreconditionError {
  public:
    using PreconditionError::PreconditionError;
};

class NoPrimaryRoads : public PreconditionError {
  public:
    NoPrimaryRoads() : PreconditionError("dataset contains no primary-class roads") {}
};

class NoData : public PreconditionError {
  public:
    using PreconditionError::PreconditionError;
};

} // namespace speedclust
