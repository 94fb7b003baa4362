#include "common.hpp"

#include <algorithm>
#include <string>

namespace truthkit::detail {

AggregationResult make_result(Algorithm algorithm, const LabelMatrix& matrix) {
  AggregationResult r;
  r.algorithm = algorithm;
  r.categories = matrix.categories();
  r.items = matrix.items();
  r.workers = matrix.workers();
  return r;
}

void require_labeled_items(const LabelMatrix& matrix) {
  for (std::size_t i = 0; i < matrix.num_items(); ++i)
    if (matrix.item_cells(i).empty())
      throw Error(ErrorCode::EmptyItem, "item '" + matrix.items()[i] + "' has no labels");
}

Matrix vote_frequencies(const LabelMatrix& matrix) {
  const std::vector<double> ones(matrix.num_workers(), 1.0);
  return weighted_vote(matrix, ones);
}

Matrix weighted_vote(const LabelMatrix& matrix, std::span<const double> weights) {
  const std::size_t k = matrix.num_categories();
  Matrix scores(matrix.num_items(), std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < matrix.num_items(); ++i) {
    auto& row = scores[i];
    double total = 0.0;
    for (const auto& cell : matrix.item_cells(i)) {
      row[cell.label] += weights[cell.worker];
      total += weights[cell.worker];
    }
    if (total <= 0.0) {
      std::fill(row.begin(), row.end(), 0.0);
      for (const auto& cell : matrix.item_cells(i)) row[cell.label] += 1.0;
      total = static_cast<double>(matrix.item_cells(i).size());
    }
    for (double& v : row) v /= total;
  }
  return scores;
}

std::vector<LabelIndex> decide(const Matrix& posteriors, const CategorySet& categories) {
  std::vector<LabelIndex> labels;
  labels.reserve(posteriors.size());
  for (const auto& row : posteriors) labels.push_back(argmax_with_priority(std::span<const double>(row), categories));
  return labels;
}

std::vector<double> agreement_rates(const LabelMatrix& matrix, std::span<const LabelIndex> consensus) {
  std::vector<double> rates(matrix.num_workers(), 0.0);
  for (std::size_t w = 0; w < matrix.num_workers(); ++w) {
    const auto& cells = matrix.worker_cells(w);
    std::size_t agree = 0;
    for (std::size_t c : cells) {
      const auto& cell = matrix.cells()[c];
      if (cell.label == consensus[cell.item]) ++agree;
    }
    rates[w] = cells.empty() ? 0.0 : static_cast<double>(agree) / static_cast<double>(cells.size());
  }
  return rates;
}

double normalize_log_row(std::span<double> row) {
  const double top = *std::max_element(row.begin(), row.end());
  if (!std::isfinite(top)) {
    throw Error(ErrorCode::NonFinite, "item posterior has no finite mass (zero-probability model "
                                      "entries; use smoothing > 0)");
  }
  double sum = 0.0;
  for (double& v : row) {
    v = std::exp(v - top);
    sum += v;
  }
  for (double& v : row) v /= sum;
  return top + std::log(sum);
}

double max_abs_change(const Matrix& a, const Matrix& b) {
  double change = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < a[i].size(); ++k) change = std::max(change, std::abs(a[i][k] - b[i][k]));
  return change;
}

double smoothed_ratio(double numerator, double denominator, double smoothing, std::size_t outcomes,
                      const char* what) {
  const double den = denominator + smoothing * static_cast<double>(outcomes);
  if (!(den > 0.0)) {
    throw Error(ErrorCode::NonFinite,
                std::string(what) + " has zero expected mass; smoothing = 0 leaves it undefined");
  }
  return (numerator + smoothing) / den;
}

}  // namespace truthkit::detail
