#include "fracdrift/errors.hpp"

namespace fracdrift {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::SingularPoint: return "SingularPoint";
    case Errc::BadExponent: return "BadExponent";
    case Errc::LogResonance: return "LogResonance";
    case Errc::ParityViolation: return "ParityViolation";
    case Errc::NoGeneralizedLimit: return "NoGeneralizedLimit";
    case Errc::FitDiverged: return "FitDiverged";
    case Errc::ResonantDiagonal: return "ResonantDiagonal";
    case Errc::BadFrame: return "BadFrame";
    case Errc::BadDomain: return "BadDomain";
    case Errc::NotMonotone: return "NotMonotone";
    case Errc::LinearSolveFailed: return "LinearSolveFailed";
    case Errc::ObstacleStall: return "ObstacleStall";
    case Errc::NoFreeBoundary: return "NoFreeBoundary";
    case Errc::EmptyWindow: return "EmptyWindow";
    case Errc::IllConditionedLadder: return "IllConditionedLadder";
    case Errc::InsufficientWindow: return "InsufficientWindow";
    case Errc::QuadratureFailed: return "QuadratureFailed";
    case Errc::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what, long index, long nearest)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what),
      code_(code),
      index_(index),
      nearest_(nearest) {}

}  // namespace fracdrift
