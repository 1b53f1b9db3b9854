#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wickmps {

enum class ErrorKind {
  DegenerateSpectrum,
  NumericalFailure,
  SingularGauge,
  DimensionMismatch,
  UnknownKind,
  ZeroState,
  NonNormalizable,
  GenericityFailure,
  PoleProximity,
  WindowTooShort,
  Inconsistent,
  AliasingRisk,
  IllConditioned,
  ShapeMismatch,
  ZeroCoefficient,
  InconsistentShapes,
  ZeroWitness,
  MissingWitness,
  NonHermitianH,
  MultipleJumpOps,
  DegenerateZero,
  NonPositive,
  MalformedInput,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a machine-readable kind so the
/// command-line front end can map it onto its exit-code contract.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace wickmps
