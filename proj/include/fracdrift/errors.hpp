#pragma once

#include <stdexcept>
#include <string>

namespace fracdrift {

enum class Errc {
  SingularPoint,
  BadExponent,
  LogResonance,
  ParityViolation,
  NoGeneralizedLimit,
  FitDiverged,
  ResonantDiagonal,
  BadFrame,
  BadDomain,
  NotMonotone,
  LinearSolveFailed,
  ObstacleStall,
  NoFreeBoundary,
  EmptyWindow,
  IllConditionedLadder,
  InsufficientWindow,
  QuadratureFailed,
  ConfigError
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what, long index = -1, long nearest = 0);

  Errc code() const noexcept { return code_; }
  // Offending basis index (ResonantDiagonal) or -1.
  long index() const noexcept { return index_; }
  // Nearest integer of p - s (ResonantDiagonal) or of p - 2s (LogResonance).
  long nearest_integer() const noexcept { return nearest_; }

 private:
  Errc code_;
  long index_;
  long nearest_;
};

}  // namespace fracdrift
