#pragma once

// Shared helpers for the aggregation algorithms. Not part of the public API.

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "truthkit/aggregation.hpp"
#include "truthkit/error.hpp"

namespace truthkit::detail {

using Matrix = std::vector<std::vector<double>>;

/// Result skeleton with items/workers/categories copied from the matrix.
AggregationResult make_result(Algorithm algorithm, const LabelMatrix& matrix);

void require_labeled_items(const LabelMatrix& matrix);

/// Empirical label frequencies per item.
Matrix vote_frequencies(const LabelMatrix& matrix);

/// Per-item vote weighted by `weights[worker]`. Items whose voters all have
/// zero weight fall back to plain counts. Returns normalized scores.
Matrix weighted_vote(const LabelMatrix& matrix, std::span<const double> weights);

/// Argmax with the category tie rule, one per row.
std::vector<LabelIndex> decide(const Matrix& posteriors, const CategorySet& categories);

/// Fraction of each worker's labels equal to `consensus[item]`.
std::vector<double> agreement_rates(const LabelMatrix& matrix, std::span<const LabelIndex> consensus);

/// In-place softmax of a row of log-scores; returns log(sum(exp(row))).
double normalize_log_row(std::span<double> row);

double max_abs_change(const Matrix& a, const Matrix& b);

inline double safe_log(double x) {
  return x > 0.0 ? std::log(x) : -std::numeric_limits<double>::infinity();
}

/// Uniform class-prior / per-row normalization with a pseudo-count. Throws
/// NonFinite when the smoothed denominator is zero.
double smoothed_ratio(double numerator, double denominator, double smoothing, std::size_t outcomes,
                      const char* what);

}  // namespace truthkit::detail
