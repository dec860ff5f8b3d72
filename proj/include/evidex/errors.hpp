#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace evidex {

// Base of every error the library throws. Callers that only need a message
// catch this; the subclasses let the service and CLI map failures to status
// codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed embedding file (text or binary).
class LoadError : public Error {
 public:
  using Error::Error;
};

// Caller passed arguments violating an operation's preconditions.
class InputError : public Error {
 public:
  using Error::Error;
};

// A document had no in-vocabulary tokens left.
class EmptyDocumentError : public Error {
 public:
  EmptyDocumentError() : Error("empty document support") {}
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// Internal invariant broken (e.g. a document token missing from the table it
// was built against).
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class ExtractionError : public Error {
 public:
  using Error::Error;
};

class QueryError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

// HTTP or transport failure talking to a source or fetching a page.
class NetworkError : public Error {
 public:
  using Error::Error;
};

struct SourceFailure {
  std::string source_id;
  std::string message;
};

// Every selected source failed during candidate search.
class FetchError : public Error {
 public:
  explicit FetchError(std::vector<SourceFailure> failures)
      : Error(describe(failures)), failures_(std::move(failures)) {}

  const std::vector<SourceFailure>& failures() const { return failures_; }

 private:
  static std::string describe(const std::vector<SourceFailure>& failures) {
    std::string msg = "all sources failed";
    for (const auto& f : failures) msg += "; " + f.source_id + ": " + f.message;
    return msg;
  }

  std::vector<SourceFailure> failures_;
};

}  // namespace evidex
