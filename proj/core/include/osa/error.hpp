#pragma once

#include <stdexcept>
#include <string>

namespace osa {

// Input file does not parse under its declared format.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A required channel (ECG or SpO2) is absent from a record.
class MissingChannelError : public FormatError {
 public:
  using FormatError::FormatError;
};

// A recognised but unsupported on-disk encoding, e.g. WFDB format 80.
class UnsupportedFormatError : public FormatError {
 public:
  using FormatError::FormatError;
};

// Caller-supplied parameters or data violate an operation's precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace osa
