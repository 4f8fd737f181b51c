#pragma once

#include <stdexcept>
#include <string>

namespace mc2a {

// Exit codes used by the command-line tool. Every library error maps onto
// exactly one of them.
enum class ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kInput = 3,
  kCapacity = 4,
  kInternalCheck = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const { return code_; }

 private:
  ExitCode code_;
};

// Malformed input: bad files, invalid arguments, violated preconditions.
class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(ExitCode::kInput, what) {}
};

// Parse failure with a 1-based line number.
class ParseError : public InputError {
 public:
  ParseError(const std::string& file, int line, const std::string& what)
      : InputError(file + ":" + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// The workload does not fit the configured hardware (memory, CDT, fields).
class CapacityError : public Error {
 public:
  explicit CapacityError(const std::string& what) : Error(ExitCode::kCapacity, what) {}
};

// A consistency check between two components failed (compiler bug,
// structural violation, bookkeeping drift).
class InternalCheckError : public Error {
 public:
  explicit InternalCheckError(const std::string& what)
      : Error(ExitCode::kInternalCheck, what) {}
};

}  // namespace mc2a
