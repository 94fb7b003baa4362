#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace truthkit {

enum class ErrorCode {
  EmptyDataset,
  DuplicateCell,
  UnknownLabel,
  InvalidCategories,
  EmptyItem,
  NonFinite,
  Diverged,
  ConvergenceFailed,
  TooFewWorkers,
  MissingInstruction,
  WorkerExists,
  ProviderError,
  MissingPrediction,
  InsufficientLabels,
  SchemaError,
  InvalidArgument,
  IoError,
};

std::string_view error_name(ErrorCode code) noexcept;

/// Every failure raised by the toolkit carries one of the codes above; the
/// message is the human-readable detail (offending ids, file:line, ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace truthkit
