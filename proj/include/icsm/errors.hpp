#pragma once

#include <stdexcept>
#include <string>

namespace icsm {

// Every failure mode has a stable name so callers (and the CLI) can match on
// the first token of what() without parsing prose.
enum class Errc {
  InvalidInterval,
  NegativeRadius,
  LengthMismatch,
  ZeroDimension,
  DegenerateBlock,
  InvalidGeoPoint,
  DuplicateCoordinates,
  ConstantVector,
  EmptyWeights,
  Infeasible,
  RankDeficient,
  MaxIterations,
  DimensionMismatch,
  SingularA,
  NoFeasibleGridPoint,
  ShapeMismatch,
  SingularQo,
  NonPositiveSigma2,
  TooManyRejections,
  ParseError,
  IoError,
  HashMismatch,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const { return code_; }
  const char* name() const { return errc_name(code_); }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace icsm
