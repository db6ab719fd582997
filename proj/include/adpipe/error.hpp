#pragma once

#include <stdexcept>
#include <string>

namespace adpipe {

enum class ErrorKind {
  InvalidInput,
  BehindCamera,
  NoIntersection,
  DegenerateInput,
  InvalidHull,
  EmptyMask,
  NoCandidate,
  NoAlignment,
  PlacementFailed,
  InsufficientTexture,
  InsufficientStructure,
  InconsistentGeometry,
  ParseError,
  Io,
};

const char* to_string(ErrorKind kind);

/// Exception carrying a machine-checkable failure kind alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);
  ErrorKind kind() const { return kind_; }
  /// Message without the kind prefix that what() carries.
  const std::string& message() const { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace adpipe
