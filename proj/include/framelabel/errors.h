#pragma once

#include <stdexcept>
#include <string>

namespace framelabel {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input bytes/text do not follow the expected file format.
class FormatError : public Error {
 public:
  using Error::Error;
};

// A value lies outside its permitted range (e.g. MIDI pitch outside the piano).
class RangeError : public Error {
 public:
  using Error::Error;
};

// Parsed data violates a domain invariant (zero-length notes, dangling notes).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Valid input that uses a feature this library does not handle.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

// A caller broke an operation's precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, int epoch, long batch)
      : Error(what), epoch_(epoch), batch_(batch) {}

  int epoch() const { return epoch_; }
  long batch() const { return batch_; }

 private:
  int epoch_;
  long batch_;
};

}  // namespace framelabel
