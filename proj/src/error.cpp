#include "adpipe/error.hpp"

namespace adpipe {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::BehindCamera: return "behind-camera";
    case ErrorKind::NoIntersection: return "no-intersection";
    case ErrorKind::DegenerateInput: return "degenerate-input";
    case ErrorKind::InvalidHull: return "invalid-hull";
    case ErrorKind::EmptyMask: return "empty-mask";
    case ErrorKind::NoCandidate: return "no-candidate";
    case ErrorKind::NoAlignment: return "no-alignment";
    case ErrorKind::PlacementFailed: return "placement-failed";
    case ErrorKind::InsufficientTexture: return "insufficient-texture";
    case ErrorKind::InsufficientStructure: return "insufficient-structure";
    case ErrorKind::InconsistentGeometry: return "inconsistent-geometry";
    case ErrorKind::ParseError: return "parse-error";
    case ErrorKind::Io: return "io-error";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      message_(message) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace adpipe
