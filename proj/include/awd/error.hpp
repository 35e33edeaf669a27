#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace awd {

/// Categories of contract violations raised by the library.
enum class ErrorKind {
  NonProbability,
  RaggedDepth,
  ShapeMismatch,
  BadStage,
  Degenerate,
  InvalidParams,
  InvalidEpsilon,
  ResolutionTooCoarse,
  UnsupportedOrder,
  BandwidthTooSmall,
  GridTooCoarse,
  GridMismatch,
  MeshTooCoarse,
  SampleOutOfBox,
  Parse,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Every library error carries its kind so the CLI can map it to an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace awd
