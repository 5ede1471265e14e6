#pragma once

#include <stdexcept>
#include <string>

namespace tempamb {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DegenerateRange : public Error {
public:
  using Error::Error;
};

class ParseError : public Error {
public:
  ParseError(std::size_t row, const std::string& reason)
      : Error("row " + std::to_string(row) + ": " + reason), row_(row) {}
  std::size_t row() const { return row_; }

private:
  std::size_t row_;
};

class DuplicateId : public Error {
public:
  using Error::Error;
};

class UnknownLabel : public Error {
public:
  using Error::Error;
};

class EmptyDataset : public Error {
public:
  using Error::Error;
};

class UnknownQuestion : public Error {
public:
  using Error::Error;
};

class YearBeforeFirstChangePoint : public Error {
public:
  using Error::Error;
};

class CacheIoError : public Error {
public:
  using Error::Error;
};

class Timeout : public Error {
public:
  using Error::Error;
};

class EndpointError : public Error {
public:
  EndpointError(int status, const std::string& body)
      : Error("endpoint returned status " + std::to_string(status) + ": " + body),
        status_(status),
        body_(body) {}
  int status() const { return status_; }
  const std::string& body() const { return body_; }

private:
  int status_;
  std::string body_;
};

class RetriesExhausted : public Error {
public:
  using Error::Error;
};

class SameYear : public Error {
public:
  using Error::Error;
};

class TooManySamples : public Error {
public:
  using Error::Error;
};

class MissingGoldLabel : public Error {
public:
  using Error::Error;
};

class UnknownQuestionId : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

}  // namespace tempamb
