#pragma once

#include <stdexcept>
#include <string>

namespace qpkam {

// Base for every named failure the library reports.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define QPKAM_ERROR(Name)                                          \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
  }

QPKAM_ERROR(ResonantFrequency);
QPKAM_ERROR(NoneAdmissible);
QPKAM_ERROR(UncertifiedDivisor);
QPKAM_ERROR(CertifiedStripExceeded);
QPKAM_ERROR(NotMonotone);
QPKAM_ERROR(NoConvergence);
QPKAM_ERROR(RealityDefect);
QPKAM_ERROR(SamplerNotFinite);
QPKAM_ERROR(QTooLarge);
QPKAM_ERROR(SmoothnessTooLow);
QPKAM_ERROR(ContractionDiverged);
QPKAM_ERROR(PreconditionDefect);
QPKAM_ERROR(RootFindFailed);
QPKAM_ERROR(NoIntersectionWitness);
QPKAM_ERROR(NotConverged);
QPKAM_ERROR(OutOfStrip);
QPKAM_ERROR(NotAGraph);
QPKAM_ERROR(ConfigError);

#undef QPKAM_ERROR

}  // namespace qpkam
