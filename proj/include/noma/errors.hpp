#pragma once

#include <stdexcept>
#include <string>

namespace noma {

// Base of every error raised by the library. Subclasses name the failed
// contract so callers (and the CLI exit-code mapping) can dispatch on type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define NOMA_DEFINE_ERROR(Name)        \
  class Name : public Error {          \
   public:                             \
    using Error::Error;                \
  };

NOMA_DEFINE_ERROR(InvalidConfig)
NOMA_DEFINE_ERROR(IllegalAction)
NOMA_DEFINE_ERROR(BudgetTooSmall)
NOMA_DEFINE_ERROR(Infeasible)
NOMA_DEFINE_ERROR(NoConvergence)
NOMA_DEFINE_ERROR(MalformedAssignment)
NOMA_DEFINE_ERROR(Overflow)
NOMA_DEFINE_ERROR(BudgetExceeded)
NOMA_DEFINE_ERROR(AllInfeasible)
NOMA_DEFINE_ERROR(DegenerateMask)
NOMA_DEFINE_ERROR(IllegalTrajectory)
NOMA_DEFINE_ERROR(EmptyMemory)
NOMA_DEFINE_ERROR(ModelFormatError)

#undef NOMA_DEFINE_ERROR

}  // namespace noma
