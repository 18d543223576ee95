#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace motionkit {

enum class ErrorCode {
  MalformedManifest,
  DuplicateLocation,
  EmptySignal,
  BadMagic,
  ShapeMismatch,
  TruncatedPayload,
  TooShort,
  BadFrameLength,
  UnsupportedRate,
  BadDirection,
  FusedMissing,
  DegenerateBN,
  EmptyDataset,
  MixedRates,
  TooFewUsers,
  MissingLocation,
  WindowTooSmall,
  NoAlignedPairs,
  Untrained,
  Io,
  UnknownSubcommand,
  BadFlag,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedManifest: return "MalformedManifest";
    case ErrorCode::DuplicateLocation: return "DuplicateLocation";
    case ErrorCode::EmptySignal: return "EmptySignal";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::BadFrameLength: return "BadFrameLength";
    case ErrorCode::UnsupportedRate: return "UnsupportedRate";
    case ErrorCode::BadDirection: return "BadDirection";
    case ErrorCode::FusedMissing: return "FusedMissing";
    case ErrorCode::DegenerateBN: return "DegenerateBN";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::MixedRates: return "MixedRates";
    case ErrorCode::TooFewUsers: return "TooFewUsers";
    case ErrorCode::MissingLocation: return "MissingLocation";
    case ErrorCode::WindowTooSmall: return "WindowTooSmall";
    case ErrorCode::NoAlignedPairs: return "NoAlignedPairs";
    case ErrorCode::Untrained: return "Untrained";
    case ErrorCode::Io: return "Io";
    case ErrorCode::UnknownSubcommand: return "UnknownSubcommand";
    case ErrorCode::BadFlag: return "BadFlag";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (tests, the CLI exit-code mapping) can branch on the kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace motionkit
