#include "truthkit/error.hpp"

namespace truthkit {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::DuplicateCell: return "DuplicateCell";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::InvalidCategories: return "InvalidCategories";
    case ErrorCode::EmptyItem: return "EmptyItem";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::ConvergenceFailed: return "ConvergenceFailed";
    case ErrorCode::TooFewWorkers: return "TooFewWorkers";
    case ErrorCode::MissingInstruction: return "MissingInstruction";
    case ErrorCode::WorkerExists: return "WorkerExists";
    case ErrorCode::ProviderError: return "ProviderError";
    case ErrorCode::MissingPrediction: return "MissingPrediction";
    case ErrorCode::InsufficientLabels: return "InsufficientLabels";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(error_name(code)) + ": " + detail),
      code_(code),
      detail_(detail) {}

}  // namespace truthkit
