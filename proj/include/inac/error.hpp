#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace inac {

enum class Errc {
  kMalformedLine,
  kChecksumMismatch,
  kFieldParse,
  kElementOutOfRange,
  kNonConvergence,
  kEpochTooFar,
  kFrameMismatch,
  kDegenerateInput,
  kCoincidentPoints,
  kInsufficientSats,
  kInsufficientAnchors,
  kSingularGeometry,
  kNonPositiveInput,
  kNonPositiveNoise,
  kLengthMismatch,
  kInvalidArgument,
  kSchemaError,
  kSemanticError,
  kMissingFile,
  kIoError,
  kHeaderMismatch,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::kMalformedLine: return "MalformedLine";
    case Errc::kChecksumMismatch: return "ChecksumMismatch";
    case Errc::kFieldParse: return "FieldParse";
    case Errc::kElementOutOfRange: return "ElementOutOfRange";
    case Errc::kNonConvergence: return "NonConvergence";
    case Errc::kEpochTooFar: return "EpochTooFar";
    case Errc::kFrameMismatch: return "FrameMismatch";
    case Errc::kDegenerateInput: return "DegenerateInput";
    case Errc::kCoincidentPoints: return "CoincidentPoints";
    case Errc::kInsufficientSats: return "InsufficientSats";
    case Errc::kInsufficientAnchors: return "InsufficientAnchors";
    case Errc::kSingularGeometry: return "SingularGeometry";
    case Errc::kNonPositiveInput: return "NonPositiveInput";
    case Errc::kNonPositiveNoise: return "NonPositiveNoise";
    case Errc::kLengthMismatch: return "LengthMismatch";
    case Errc::kInvalidArgument: return "InvalidArgument";
    case Errc::kSchemaError: return "SchemaError";
    case Errc::kSemanticError: return "SemanticError";
    case Errc::kMissingFile: return "MissingFile";
    case Errc::kIoError: return "IoError";
    case Errc::kHeaderMismatch: return "HeaderMismatch";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the Errc kinds so callers
/// can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Error located at a 1-based line of a text input.
class LineError : public Error {
 public:
  LineError(Errc code, int line, const std::string& what)
      : Error(code, "line " + std::to_string(line) + ": " + what), line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace inac
