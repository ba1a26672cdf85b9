#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace shroom {

// Root of the toolkit's exception hierarchy. The CLI maps each branch to an
// exit code: InputError -> 2, AlignmentError -> 3, BackendError -> 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class ParseError : public InputError {
 public:
  using InputError::InputError;
};

class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

// Annotator votes that admit no strict majority, or an empty vote list.
class AnnotationError : public InputError {
 public:
  using InputError::InputError;
};

class UnscorableSampleError : public InputError {
 public:
  using InputError::InputError;
};

class AlignmentError : public Error {
 public:
  using Error::Error;
};

class UndefinedCorrelationError : public Error {
 public:
  using Error::Error;
};

class BackendError : public Error {
 public:
  explicit BackendError(const std::string& what,
                        std::optional<std::size_t> index = std::nullopt)
      : Error(what), index_(index) {}

  // Position of the failing item within the batch handed to the backend.
  std::optional<std::size_t> index() const { return index_; }

 private:
  std::optional<std::size_t> index_;
};

}  // namespace shroom
