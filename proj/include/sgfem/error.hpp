#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sgfem {

enum class ErrorCode {
  InvalidArgument,
  InterfaceOnNode,
  TwoInterfacesInElement,
  OutOfDomain,
  EndpointOnInterface,
  IndexOutOfRange,
  UnsupportedOrder,
  ConstantSolveFailed,
  DegenerateConstants,
  PieceCountMismatch,
  NonpositiveCoefficient,
  MaxIterationsExceeded,
  SingularJacobian,
  SingularSaddleSystem,
  SingularMatrix,
  SingularLocalSystem,
  InsufficientData,
  DimensionMismatch,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InterfaceOnNode: return "InterfaceOnNode";
    case ErrorCode::TwoInterfacesInElement: return "TwoInterfacesInElement";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::EndpointOnInterface: return "EndpointOnInterface";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::UnsupportedOrder: return "UnsupportedOrder";
    case ErrorCode::ConstantSolveFailed: return "ConstantSolveFailed";
    case ErrorCode::DegenerateConstants: return "DegenerateConstants";
    case ErrorCode::PieceCountMismatch: return "PieceCountMismatch";
    case ErrorCode::NonpositiveCoefficient: return "NonpositiveCoefficient";
    case ErrorCode::MaxIterationsExceeded: return "MaxIterationsExceeded";
    case ErrorCode::SingularJacobian: return "SingularJacobian";
    case ErrorCode::SingularSaddleSystem: return "SingularSaddleSystem";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::SingularLocalSystem: return "SingularLocalSystem";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
  }
  return "Unknown";
}

/// Library exception. `what()` is prefixed with the code name so callers
/// that only see the message can still dispatch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// True for codes describing a bad problem/mesh/config rather than a
/// numerical breakdown. The CLI maps these to exit code 2.
constexpr bool is_configuration_error(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::InterfaceOnNode:
    case ErrorCode::TwoInterfacesInElement:
    case ErrorCode::OutOfDomain:
    case ErrorCode::EndpointOnInterface:
    case ErrorCode::IndexOutOfRange:
    case ErrorCode::UnsupportedOrder:
    case ErrorCode::PieceCountMismatch:
    case ErrorCode::NonpositiveCoefficient:
    case ErrorCode::InsufficientData:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::DegenerateConstants:
      return true;
    default:
      return false;
  }
}

}  // namespace sgfem
