#pragma once

#include <stdexcept>
#include <string>

namespace bltk {

enum class ErrorKind {
  RankDeficient,
  DimensionMismatch,
  IllConditioned,
  UnboundedBody,
  InvalidInput,
  IdenticallyZero,
  HypothesisViolated,
  DegreeOverflow,
  UnsupportedShapes,
  SingularDenominator,
  ScalingMismatch,
  EmptyFamily,
  InfiniteBLConstant,
  Unsupported,
  ConfigError,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::IllConditioned: return "IllConditioned";
    case ErrorKind::UnboundedBody: return "UnboundedBody";
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::IdenticallyZero: return "IdenticallyZero";
    case ErrorKind::HypothesisViolated: return "HypothesisViolated";
    case ErrorKind::DegreeOverflow: return "DegreeOverflow";
    case ErrorKind::UnsupportedShapes: return "UnsupportedShapes";
    case ErrorKind::SingularDenominator: return "SingularDenominator";
    case ErrorKind::ScalingMismatch: return "ScalingMismatch";
    case ErrorKind::EmptyFamily: return "EmptyFamily";
    case ErrorKind::InfiniteBLConstant: return "InfiniteBLConstant";
    case ErrorKind::Unsupported: return "Unsupported";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace bltk
