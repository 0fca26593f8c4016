#pragma once

#include <stdexcept>
#include <string>

namespace oflc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Torque-channel direction b(i) is too short to invert (‖b‖ < 1e-6).
class DegenerateB : public Error {
 public:
  using Error::Error;
};

class OrthogonalityViolation : public Error {
 public:
  using Error::Error;
};

/// z_max requested outside the feasible torque band.
class NegativeDiscriminant : public Error {
 public:
  using Error::Error;
};

class NonFinite : public Error {
 public:
  using Error::Error;
};

class PoorFit : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class ValidationError : public Error {
 public:
  ValidationError(std::string field, std::string reason)
      : Error(field + ": " + reason), field_(std::move(field)), reason_(std::move(reason)) {}
  const std::string& field() const { return field_; }
  const std::string& reason() const { return reason_; }

 private:
  std::string field_;
  std::string reason_;
};

}  // namespace oflc
