#pragma once

#include <stdexcept>
#include <string>

namespace bernstab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define BERNSTAB_ERROR(Name)                        \
  class Name : public Error {                       \
   public:                                          \
    explicit Name(const std::string& what)          \
        : Error(std::string(#Name ": ") + what) {}  \
  }

BERNSTAB_ERROR(DimensionMismatch);
BERNSTAB_ERROR(InvalidDistribution);
BERNSTAB_ERROR(DegenerateNoise);
BERNSTAB_ERROR(NoDensity);
BERNSTAB_ERROR(BranchLost);
BERNSTAB_ERROR(AllBelowFloor);
BERNSTAB_ERROR(Degenerate);
BERNSTAB_ERROR(MassDeficit);
BERNSTAB_ERROR(NoConvergence);
BERNSTAB_ERROR(NotSymmetric);
BERNSTAB_ERROR(BoundViolated);
BERNSTAB_ERROR(PFloorZero);
BERNSTAB_ERROR(ThresholdExceeded);
BERNSTAB_ERROR(DegenerateAnchor);
BERNSTAB_ERROR(HypothesisFailed);
BERNSTAB_ERROR(AuditFailure);
BERNSTAB_ERROR(CapExceeded);
BERNSTAB_ERROR(EmptyS);
BERNSTAB_ERROR(InvalidChannel);
BERNSTAB_ERROR(ConfigError);

#undef BERNSTAB_ERROR

}  // namespace bernstab
