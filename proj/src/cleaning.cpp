#include "truthkit/cleaning.hpp"

#include <set>

#include "truthkit/error.hpp"

namespace truthkit {

std::string_view strategy_name(CleaningStrategy strategy) noexcept {
  switch (strategy) {
    case CleaningStrategy::All: return "all";
    case CleaningStrategy::ExcludeByWorker: return "exclude-worker";
    case CleaningStrategy::ExcludeByBatch: return "exclude-batch";
  }
  return "all";
}

CleaningStrategy parse_strategy(std::string_view text) {
  if (text == "all") return CleaningStrategy::All;
  if (text == "exclude-worker") return CleaningStrategy::ExcludeByWorker;
  if (text == "exclude-batch") return CleaningStrategy::ExcludeByBatch;
  throw Error(ErrorCode::InvalidArgument,
              "cleaning strategy must be all, exclude-worker or exclude-batch; got '" +
                  std::string(text) + "'");
}

CleaningReport clean_with_report(std::span<const LabelRecord> records, const RemovalLedger& ledger,
                                 CleaningStrategy strategy) {
  CleaningReport report;
  std::set<std::string> before;
  std::set<std::string> after;
  for (const auto& r : records) {
    before.insert(r.item_id);
    const auto removed = ledger.removed_in(r.worker_id);
    bool keep = true;
    if (removed) {
      switch (strategy) {
        case CleaningStrategy::All: break;
        case CleaningStrategy::ExcludeByWorker: keep = false; break;
        case CleaningStrategy::ExcludeByBatch:
          if (r.batch_id > *removed) report.post_removal.push_back(r);
          keep = r.batch_id < *removed;
          break;
      }
    }
    if (keep) {
      after.insert(r.item_id);
      report.kept.push_back(r);
    } else {
      ++report.dropped;
    }
  }
  for (const auto& item : before)
    if (!after.count(item)) report.emptied_items.push_back(item);
  return report;
}

}  // namespace truthkit
