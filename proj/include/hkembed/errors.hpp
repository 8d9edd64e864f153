#pragma once

#include <stdexcept>
#include <string>

namespace hkembed {

/** Base class of every error raised by the library. */
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define HKEMBED_DEFINE_ERROR(Name)      \
  class Name : public Error {           \
   public:                              \
    using Error::Error;                 \
  }

HKEMBED_DEFINE_ERROR(InvalidArgument);
HKEMBED_DEFINE_ERROR(InvalidMeasure);

// measures / dataset container
HKEMBED_DEFINE_ERROR(AllMassBelowThreshold);
HKEMBED_DEFINE_ERROR(EmptyDataset);
HKEMBED_DEFINE_ERROR(DiskOutOfDomain);
HKEMBED_DEFINE_ERROR(FormatError);
HKEMBED_DEFINE_ERROR(IoFailure);

// transport
HKEMBED_DEFINE_ERROR(MassMismatch);
HKEMBED_DEFINE_ERROR(SolverFailure);
HKEMBED_DEFINE_ERROR(InfiniteCostMass);
HKEMBED_DEFINE_ERROR(NumericalOverflow);

// distance matrices
HKEMBED_DEFINE_ERROR(CorruptCache);
HKEMBED_DEFINE_ERROR(FingerprintMismatch);

// embeddings
HKEMBED_DEFINE_ERROR(DegenerateSpectrum);
HKEMBED_DEFINE_ERROR(InsufficientSpectrum);
HKEMBED_DEFINE_ERROR(BandwidthBisectionFailure);
HKEMBED_DEFINE_ERROR(ConvergenceFailure);

// learning / clustering / stats
HKEMBED_DEFINE_ERROR(ClassTooSmall);
HKEMBED_DEFINE_ERROR(SingularCovariance);
HKEMBED_DEFINE_ERROR(LengthMismatch);
HKEMBED_DEFINE_ERROR(MissingMetric);
HKEMBED_DEFINE_ERROR(SizeTooLarge);

#undef HKEMBED_DEFINE_ERROR

/** Raised by pairwise computations; carries the pair whose solve failed. */
class PairSolveError : public Error {
 public:
  PairSolveError(std::size_t i, std::size_t j, const std::string& what)
      : Error("pair (" + std::to_string(i) + ", " + std::to_string(j) + "): " + what), i_(i), j_(j) {}
  std::size_t first() const noexcept { return i_; }
  std::size_t second() const noexcept { return j_; }

 private:
  std::size_t i_;
  std::size_t j_;
};

}  // namespace hkembed
