#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace slicegap {

// Root of every library exception. Callers that only care about "the library
// refused" can catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SLICEGAP_DEFINE_ERROR(Name)        \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

SLICEGAP_DEFINE_ERROR(ArgumentError);
SLICEGAP_DEFINE_ERROR(EmptyLevelSetError);
SLICEGAP_DEFINE_ERROR(MembershipViolationError);
SLICEGAP_DEFINE_ERROR(UnsupportedShapeError);
SLICEGAP_DEFINE_ERROR(InvalidStateError);
SLICEGAP_DEFINE_ERROR(PointOffSliceError);
SLICEGAP_DEFINE_ERROR(OutOfClassError);
SLICEGAP_DEFINE_ERROR(RunawayExpansionError);
SLICEGAP_DEFINE_ERROR(ShrinkageStallError);
SLICEGAP_DEFINE_ERROR(SingularityError);
SLICEGAP_DEFINE_ERROR(CoverageError);
SLICEGAP_DEFINE_ERROR(InvariantViolationError);
SLICEGAP_DEFINE_ERROR(InsufficientDataError);
SLICEGAP_DEFINE_ERROR(DegenerateVarianceError);
SLICEGAP_DEFINE_ERROR(ConfigError);

#undef SLICEGAP_DEFINE_ERROR

// Raised by the chain runner when a transition fails; carries the index of the
// step that was being computed.
class StepError : public Error {
 public:
  StepError(std::size_t step, const std::string& what)
      : Error("step " + std::to_string(step) + ": " + what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace slicegap
