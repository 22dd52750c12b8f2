#pragma once

#include <stdexcept>
#include <string>

namespace lqw {

// Domain errors. Every failure the library reports derives from Error so the
// CLI can map it to exit code 1; ConfigError maps to exit code 2.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define LQW_ERROR(Name)                                               \
  class Name : public Error {                                         \
   public:                                                            \
    explicit Name(const std::string& what) : Error(#Name, what) {}    \
  };

LQW_ERROR(NonFiniteEnergy)
LQW_ERROR(NonFiniteGradient)
LQW_ERROR(InvalidBatch)
LQW_ERROR(AssumptionViolation)
LQW_ERROR(UnsupportedDimension)
LQW_ERROR(DegenerateDensity)
LQW_ERROR(InvalidArgument)
LQW_ERROR(InvalidStep)
LQW_ERROR(StationaryNotConverged)
LQW_ERROR(TooLargeForExact)
LQW_ERROR(DivergenceDetected)
LQW_ERROR(TooLargeForFull)
LQW_ERROR(ZeroPhaseGap)
LQW_ERROR(ModeMismatch)
LQW_ERROR(InvalidThreshold)
LQW_ERROR(TooManyBatches)
LQW_ERROR(GrowthTooAggressive)
LQW_ERROR(ScheduleTooLong)
LQW_ERROR(NoOverlap)
LQW_ERROR(IllConditionedSchedule)
LQW_ERROR(ConfigError)

#undef LQW_ERROR

class AnnealingFailed : public Error {
 public:
  AnnealingFailed(int stage, const std::string& what)
      : Error("AnnealingFailed", "stage " + std::to_string(stage) + ": " + what),
        stage_(stage) {}
  int stage() const noexcept { return stage_; }

 private:
  int stage_;
};

}  // namespace lqw
