#pragma once

#include <stdexcept>
#include <string>

namespace fastswitch {

/// Broad failure category; the CLI maps each one to an exit code.
enum class ErrorKind { validation, numerics, io };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define FASTSWITCH_DEFINE_ERROR(Name, Kind)                                     \
  class Name : public Error {                                                  \
   public:                                                                     \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {}   \
  };

FASTSWITCH_DEFINE_ERROR(ValidationError, validation)
FASTSWITCH_DEFINE_ERROR(ParseError, validation)
FASTSWITCH_DEFINE_ERROR(DomainError, validation)
FASTSWITCH_DEFINE_ERROR(DegenerateInput, validation)
FASTSWITCH_DEFINE_ERROR(InvalidEquilibrium, validation)
FASTSWITCH_DEFINE_ERROR(InsufficientSnapshots, validation)
FASTSWITCH_DEFINE_ERROR(NonBracketing, numerics)
FASTSWITCH_DEFINE_ERROR(NoConvergence, numerics)
FASTSWITCH_DEFINE_ERROR(DiscontinuityError, numerics)
FASTSWITCH_DEFINE_ERROR(EmptyResult, numerics)
FASTSWITCH_DEFINE_ERROR(MatchingError, numerics)
FASTSWITCH_DEFINE_ERROR(StepSizeUnderflow, numerics)
FASTSWITCH_DEFINE_ERROR(NegativeStateBeyondTolerance, numerics)
FASTSWITCH_DEFINE_ERROR(IoError, io)

#undef FASTSWITCH_DEFINE_ERROR

}  // namespace fastswitch
