#pragma once

#include <stdexcept>
#include <string>

namespace team {

/// Base of every error the library raises. `kind()` is a stable,
/// machine-parseable class name used by the CLI error line.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept = 0;
};

#define TEAM_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                     \
   public:                                                        \
    using Error::Error;                                           \
    const char* kind() const noexcept override { return #Name; }  \
  }

// Bad shapes or inconsistent settings.
TEAM_DEFINE_ERROR(ConfigError);
// Bad data values (class index out of range, empty sequences).
TEAM_DEFINE_ERROR(InputError);
// API misuse: wrong widths, overlapping index maps, missing state.
TEAM_DEFINE_ERROR(UsageError);
// NaN/Inf encountered during computation.
TEAM_DEFINE_ERROR(NumericError);
// Malformed or inconsistent feature schema.
TEAM_DEFINE_ERROR(SchemaError);
// Checkpoint truncation, hash mismatch or version skew.
TEAM_DEFINE_ERROR(IntegrityError);
// Not enough records to satisfy a request.
TEAM_DEFINE_ERROR(CountError);
// A recipe assertion did not hold.
TEAM_DEFINE_ERROR(AssertionFailure);
// Filesystem or parse failure on an input file.
TEAM_DEFINE_ERROR(IoError);

#undef TEAM_DEFINE_ERROR

}  // namespace team
