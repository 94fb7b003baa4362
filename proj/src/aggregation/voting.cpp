// Majority vote and Wawa (agreement-weighted vote).

#include "common.hpp"

namespace truthkit {

AggregationResult aggregate_majority_vote(const LabelMatrix& matrix) {
  detail::require_labeled_items(matrix);
  auto result = detail::make_result(Algorithm::MajorityVote, matrix);
  const std::size_t k = matrix.num_categories();
  result.labels.reserve(matrix.num_items());
  result.posteriors.reserve(matrix.num_items());
  std::vector<long long> counts(k);
  for (std::size_t i = 0; i < matrix.num_items(); ++i) {
    std::fill(counts.begin(), counts.end(), 0);
    const auto cells = matrix.item_cells(i);
    for (const auto& cell : cells) ++counts[cell.label];
    result.labels.push_back(argmax_with_priority(std::span<const long long>(counts), matrix.categories()));
    std::vector<double> row(k);
    for (std::size_t c = 0; c < k; ++c)
      row[c] = static_cast<double>(counts[c]) / static_cast<double>(cells.size());
    result.posteriors.push_back(std::move(row));
  }
  result.worker_skill.assign(matrix.num_workers(), {});
  result.iterations = 1;
  return result;
}

AggregationResult aggregate_wawa(const LabelMatrix& matrix) {
  const auto mv = aggregate_majority_vote(matrix);
  const auto weights = detail::agreement_rates(matrix, mv.labels);

  auto result = detail::make_result(Algorithm::Wawa, matrix);
  result.posteriors = detail::weighted_vote(matrix, weights);
  result.labels = detail::decide(result.posteriors, matrix.categories());
  result.skill_kind = "agreement_weight";
  for (double w : weights) result.worker_skill.push_back({w});
  result.metadata["normalization"] = "global";
  result.iterations = 1;
  return result;
}

}  // namespace truthkit
