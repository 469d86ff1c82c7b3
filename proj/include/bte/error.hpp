#pragma once

#include <stdexcept>
#include <string>

namespace bte {

enum class ErrorKind {
  NotInterior,
  BadDirection,
  TangentFace,
  NotOnBoundary,
  EmptyGrid,
  ShapeMismatch,
  NegativeData,
  NonPositiveLambda,
  NoConvergence,
  AsymmetricGrid,
  SeriesDivergence,
  HasKernel,
  LengthMismatch,
  BadExponent,
  LineSearchStall,
  SubCriticalViolation,
  ZeroSource,
  WrongConfiguration,
  MemoryLimit,
  ParseError,
  InvalidArgument,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

}  // namespace bte
