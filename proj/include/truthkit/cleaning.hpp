#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "truthkit/core.hpp"

namespace truthkit {

enum class CleaningStrategy {
  All,              // keep every collected label
  ExcludeByWorker,  // drop every label of a worker who was ever removed
  ExcludeByBatch,   // drop a removed worker's labels from the removal batch on
};

std::string_view strategy_name(CleaningStrategy strategy) noexcept;  // "all", "exclude-worker", ...
CleaningStrategy parse_strategy(std::string_view text);

struct CleaningReport {
  std::vector<LabelRecord> kept;
  std::size_t dropped = 0;
  /// Records dated after their worker's removal batch. Removed workers lose
  /// access, so these should not exist; they are dropped and listed here.
  std::vector<LabelRecord> post_removal;
  /// Items that had labels before cleaning and have none after.
  std::vector<std::string> emptied_items;
};

CleaningReport clean_with_report(std::span<const LabelRecord> records, const RemovalLedger& ledger,
                                 CleaningStrategy strategy);

inline std::vector<LabelRecord> clean(std::span<const LabelRecord> records,
                                      const RemovalLedger& ledger, CleaningStrategy strategy) {
  return clean_with_report(records, ledger, strategy).kept;
}

}  // namespace truthkit
