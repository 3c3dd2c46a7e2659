/// Exception types raised by the solver library.
#pragma once

#include <stdexcept>
#include <string>

namespace sigmalab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SIGMALAB_ERROR(Name)                 \
  class Name : public Error {                \
   public:                                   \
    explicit Name(const std::string& what)   \
        : Error(#Name ": " + what) {}        \
  }

SIGMALAB_ERROR(ConfigError);
SIGMALAB_ERROR(GridMismatch);
SIGMALAB_ERROR(DegenerateDepth);
SIGMALAB_ERROR(DegenerateDensity);
SIGMALAB_ERROR(DegenerateDiffeo);
SIGMALAB_ERROR(InsufficientResolution);
SIGMALAB_ERROR(NoConvergence);
SIGMALAB_ERROR(IllConditioned);
SIGMALAB_ERROR(InsufficientHistory);
SIGMALAB_ERROR(BlowUpSuspected);
SIGMALAB_ERROR(CFLViolation);
SIGMALAB_ERROR(InvalidStreamfunction);
SIGMALAB_ERROR(InterpolationOutOfRange);
SIGMALAB_ERROR(PreparationFailed);

#undef SIGMALAB_ERROR

}  // namespace sigmalab
