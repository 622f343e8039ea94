#pragma once

#include <stdexcept>
#include <string>

namespace xbar {

// Base class for every error raised by the simulator.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A heater power, wavelength or other physical quantity is outside its allowed window.
class RangeError : public Error {
 public:
  using Error::Error;
};

// The requested device state cannot be reached (loss-limited Q, tuning range).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Negative or otherwise unencodable optical input.
class EncodingError : public Error {
 public:
  using Error::Error;
};

// A multi-pass measurement protocol was invoked without a required pass.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

// A binary file ended before its header said it would.
class LengthError : public FormatError {
 public:
  using FormatError::FormatError;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace xbar
