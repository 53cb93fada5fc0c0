#include "wevbg/errors.hpp"

namespace wevbg {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidMatrix: return "InvalidMatrix";
    case ErrorKind::DimensionError: return "DimensionError";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::InsufficientHistory: return "InsufficientHistory";
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::SelectionError: return "SelectionError";
    case ErrorKind::InvalidBlockSize: return "InvalidBlockSize";
    case ErrorKind::SkippedDegenerate: return "SkippedDegenerate";
    case ErrorKind::NotFound: return "NotFound";
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::LabelError: return "LabelError";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace wevbg
