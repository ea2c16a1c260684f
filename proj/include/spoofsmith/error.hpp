#pragma once

#include <stdexcept>
#include <string>

namespace spoofsmith {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SPOOFSMITH_ERROR(Name)              \
  class Name : public Error {               \
   public:                                  \
    using Error::Error;                     \
  }

SPOOFSMITH_ERROR(InvalidShapeError);
SPOOFSMITH_ERROR(InvalidArgumentError);
SPOOFSMITH_ERROR(DegenerateBatchError);
SPOOFSMITH_ERROR(InconsistentStateError);
SPOOFSMITH_ERROR(StratificationError);
SPOOFSMITH_ERROR(ConfigError);
SPOOFSMITH_ERROR(InsufficientDataError);
SPOOFSMITH_ERROR(IoError);
SPOOFSMITH_ERROR(ParseError);
SPOOFSMITH_ERROR(ValidationError);
SPOOFSMITH_ERROR(DecodeError);
SPOOFSMITH_ERROR(UnsupportedVersionError);
SPOOFSMITH_ERROR(CorruptionError);
SPOOFSMITH_ERROR(ConfigMismatchError);
SPOOFSMITH_ERROR(EmptyInputError);
SPOOFSMITH_ERROR(DegenerateInputError);

#undef SPOOFSMITH_ERROR

}  // namespace spoofsmith
