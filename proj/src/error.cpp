#include "awd/error.hpp"

namespace awd {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonProbability: return "NonProbability";
    case ErrorKind::RaggedDepth: return "RaggedDepth";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::BadStage: return "BadStage";
    case ErrorKind::Degenerate: return "Degenerate";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::InvalidEpsilon: return "InvalidEpsilon";
    case ErrorKind::ResolutionTooCoarse: return "ResolutionTooCoarse";
    case ErrorKind::UnsupportedOrder: return "UnsupportedOrder";
    case ErrorKind::BandwidthTooSmall: return "BandwidthTooSmall";
    case ErrorKind::GridTooCoarse: return "GridTooCoarse";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::MeshTooCoarse: return "MeshTooCoarse";
    case ErrorKind::SampleOutOfBox: return "SampleOutOfBox";
    case ErrorKind::Parse: return "Parse";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace awd
