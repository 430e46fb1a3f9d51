#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stylespace {

enum class ErrorCode {
  EmptySet,
  DimMismatch,
  ZeroVector,
  NotUnit,
  NonFinite,
  SingleClass,
  DegenerateDirection,
  InvalidConfig,
  BatchTooSmall,
  NonFiniteLoss,
  InsufficientData,
  NoMatchedPair,
  Parse,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::NotUnit: return "NotUnit";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::DegenerateDirection: return "DegenerateDirection";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::BatchTooSmall: return "BatchTooSmall";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::NoMatchedPair: return "NoMatchedPair";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure in the library surfaces as this exception; callers switch on
/// code() rather than parsing the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace stylespace
