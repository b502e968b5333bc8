#include "icsm/errors.hpp"

namespace icsm {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::InvalidInterval: return "InvalidInterval";
    case Errc::NegativeRadius: return "NegativeRadius";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::ZeroDimension: return "ZeroDimension";
    case Errc::DegenerateBlock: return "DegenerateBlock";
    case Errc::InvalidGeoPoint: return "InvalidGeoPoint";
    case Errc::DuplicateCoordinates: return "DuplicateCoordinates";
    case Errc::ConstantVector: return "ConstantVector";
    case Errc::EmptyWeights: return "EmptyWeights";
    case Errc::Infeasible: return "Infeasible";
    case Errc::RankDeficient: return "RankDeficient";
    case Errc::MaxIterations: return "MaxIterations";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::SingularA: return "SingularA";
    case Errc::NoFeasibleGridPoint: return "NoFeasibleGridPoint";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::SingularQo: return "SingularQo";
    case Errc::NonPositiveSigma2: return "NonPositiveSigma2";
    case Errc::TooManyRejections: return "TooManyRejections";
    case Errc::ParseError: return "ParseError";
    case Errc::IoError: return "IoError";
    case Errc::HashMismatch: return "HashMismatch";
  }
  return "UnknownError";
}

}  // namespace icsm
