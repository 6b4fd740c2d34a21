#pragma once

#include <stdexcept>
#include <string>

namespace bprocova {

/// Broad failure class; the CLI maps it onto its exit-code taxonomy.
enum class ErrorKind {
  io = 1,
  validation = 2,
  numerical = 3,
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

#define BPROCOVA_DEFINE_ERROR(Name, Kind)                                                          \
  class Name : public Error {                                                                      \
  public:                                                                                          \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, #Name ": " + what) {}         \
  }

BPROCOVA_DEFINE_ERROR(IoError, io);

BPROCOVA_DEFINE_ERROR(ParseError, validation);
BPROCOVA_DEFINE_ERROR(ValidationError, validation);
BPROCOVA_DEFINE_ERROR(ConfigError, validation);
BPROCOVA_DEFINE_ERROR(RankDeficient, validation);
BPROCOVA_DEFINE_ERROR(NonFinite, validation);

BPROCOVA_DEFINE_ERROR(DegenerateFit, numerical);
BPROCOVA_DEFINE_ERROR(DegenerateResample, numerical);
BPROCOVA_DEFINE_ERROR(NumericalFailure, numerical);
BPROCOVA_DEFINE_ERROR(UndefinedVariance, numerical);
BPROCOVA_DEFINE_ERROR(UndefinedPriorESS, numerical);
BPROCOVA_DEFINE_ERROR(NonFiniteDensity, numerical);
BPROCOVA_DEFINE_ERROR(ChainDiverged, numerical);
BPROCOVA_DEFINE_ERROR(ScenarioFailed, numerical);
BPROCOVA_DEFINE_ERROR(NoFeasibleGamma, numerical);

#undef BPROCOVA_DEFINE_ERROR

}  // namespace bprocova
