#pragma once

#include <stdexcept>
#include <string>

namespace taskforge {

// Base for every error raised by the engine. Callers that only need to
// report a failure can catch this; the subclasses map onto distinct
// precondition classes (and distinct HTTP statuses in the service).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class EmptyTableError : public Error {
 public:
  using Error::Error;
};

class WindowError : public Error {
 public:
  using Error::Error;
};

class TaskDefinitionError : public Error {
 public:
  using Error::Error;
};

class FeedbackError : public Error {
 public:
  using Error::Error;
};

}  // namespace taskforge
