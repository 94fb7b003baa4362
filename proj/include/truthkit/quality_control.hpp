#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "truthkit/core.hpp"
#include "truthkit/money.hpp"

namespace truthkit {

/// Requester-side monitoring statistics for one worker.
struct WorkerStats {
  std::string worker_id;
  /// Over gold-covered items only; absent when the worker labeled none.
  std::optional<double> accuracy_vs_partial_gold;
  double majority_agreement_rate = 0.0;
  double rare_label_rate = 0.0;
  long long n_labels = 0;
  long long n_gold_labels = 0;
};

struct BatchWorkerStats {
  std::int64_t batch_id = 0;
  WorkerStats stats;
};

struct QcReport {
  std::vector<WorkerStats> workers;  // accumulated over all batches, by worker id
  std::vector<BatchWorkerStats> per_batch;  // by (batch, worker id)
};

/// Agreement is against the per-item majority vote of *all* records (QC runs
/// before any removal decision). Throws UnknownLabel if `rare_label` is not a
/// category or a record carries an unknown label.
QcReport worker_statistics(std::span<const LabelRecord> records, const GoldLabels& partial_gold,
                           std::string_view rare_label, const CategorySet& categories);

enum class RankMetric { Accuracy, Agreement, RareRate };
enum class RankEnd { Bottom, Top };

RankMetric parse_rank_metric(std::string_view text);  // accuracy | agreement | rare_rate

/// Worker ids ordered worst-first (Bottom) or highest-first (Top), ties by
/// worker id, truncated to k. Workers without gold accuracy are skipped when
/// ranking by accuracy.
std::vector<std::string> rank_workers(std::span<const WorkerStats> stats, RankMetric metric, std::size_t k,
                                      RankEnd end);

struct Payment {
  long long minutes = 1;
  Money amount;
};

/// minutes = max(1, ceil(tokens / 250)); payment = $0.05 + minutes * $0.17.
Payment estimate_payment(long long token_count);

}  // namespace truthkit
