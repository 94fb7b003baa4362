// M-MSR: under the one-coin model the rescaled pairwise agreement
//   C_ij = (K * agree_ij - 1) / (K - 1)
// equals s_i * s_j with s = (K * p - 1) / (K - 1). The skill vector is the
// rank-one factor of C's observed off-diagonal entries, found by alternating
// mean-subsequence-reduced (trimmed) averages. Labels come from a one-coin
// log-odds weighted vote.

#include <algorithm>
#include <numeric>

#include "common.hpp"

namespace truthkit {

namespace {

/// Drops up to `trim` values above `anchor` (the largest ones) and up to
/// `trim` below it (the smallest ones), then averages the rest. Returns the
/// anchor when nothing is left.
double reduced_mean(std::vector<double>& values, std::size_t trim, double anchor) {
  std::sort(values.begin(), values.end());
  std::size_t lo = 0;
  std::size_t hi = values.size();
  for (std::size_t t = 0; t < trim && lo < hi && values[lo] < anchor; ++t) ++lo;
  for (std::size_t t = 0; t < trim && hi > lo && values[hi - 1] > anchor; ++t) --hi;
  if (lo == hi) return anchor;
  return std::accumulate(values.begin() + static_cast<std::ptrdiff_t>(lo),
                         values.begin() + static_cast<std::ptrdiff_t>(hi), 0.0) /
         static_cast<double>(hi - lo);
}

}  // namespace

AggregationResult aggregate_mmsr(const LabelMatrix& matrix, const EmConfig& cfg) {
  cfg.validate();
  detail::require_labeled_items(matrix);
  const std::size_t m = matrix.num_workers();
  const std::size_t k = matrix.num_categories();
  if (m < 2) throw Error(ErrorCode::TooFewWorkers, "M-MSR needs at least two workers");
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "M-MSR needs at least two categories");

  auto result = detail::make_result(Algorithm::Mmsr, matrix);
  if (m < 10) {
    result.warnings.push_back("TooFewWorkers: " + std::to_string(m) +
                              " workers; M-MSR is unreliable below 10 and may fail to converge");
  }

  // Pairwise agreement over co-labeled items.
  std::vector<double> agree(m * m, 0.0);
  std::vector<double> overlap(m * m, 0.0);
  for (std::size_t i = 0; i < matrix.num_items(); ++i) {
    const auto cells = matrix.item_cells(i);
    for (std::size_t a = 0; a < cells.size(); ++a) {
      for (std::size_t b = a + 1; b < cells.size(); ++b) {
        const std::size_t u = cells[a].worker, v = cells[b].worker;
        const double same = cells[a].label == cells[b].label ? 1.0 : 0.0;
        agree[u * m + v] += same;
        agree[v * m + u] += same;
        overlap[u * m + v] += 1.0;
        overlap[v * m + u] += 1.0;
      }
    }
  }
  const double kd = static_cast<double>(k);
  std::vector<std::vector<std::pair<std::size_t, double>>> observed(m);
  std::size_t min_observed = m;
  for (std::size_t u = 0; u < m; ++u) {
    for (std::size_t v = 0; v < m; ++v) {
      if (u == v || overlap[u * m + v] == 0.0) continue;
      const double rate = agree[u * m + v] / overlap[u * m + v];
      observed[u].push_back({v, (kd * rate - 1.0) / (kd - 1.0)});
    }
    if (observed[u].empty()) {
      throw Error(ErrorCode::ConvergenceFailed,
                  "worker '" + matrix.workers()[u] + "' shares no items with any other worker");
    }
    min_observed = std::min(min_observed, observed[u].size());
  }
  const std::size_t trim = min_observed / 2 >= 1 ? min_observed / 2 - 1 : 0;

  std::vector<double> left(m, 1.0), right(m, 1.0);
  std::vector<double> scratch;
  result.converged = false;
  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    const auto prev_left = left;
    const auto prev_right = right;
    for (std::size_t v = 0; v < m; ++v) {
      scratch.clear();
      for (const auto& [u, c] : observed[v]) scratch.push_back(c / prev_left[u]);
      right[v] = reduced_mean(scratch, trim, prev_right[v]);
    }
    for (std::size_t u = 0; u < m; ++u) {
      scratch.clear();
      for (const auto& [v, c] : observed[u]) scratch.push_back(c / right[v]);
      left[u] = reduced_mean(scratch, trim, prev_left[u]);
    }
    for (std::size_t w = 0; w < m; ++w) {
      if (!std::isfinite(left[w]) || !std::isfinite(right[w]) || std::abs(left[w]) < 1e-12 ||
          std::abs(right[w]) < 1e-12) {
        throw Error(ErrorCode::ConvergenceFailed,
                    "rank-one iteration degenerated at worker '" + matrix.workers()[w] +
                        "' (iteration " + std::to_string(iter) + ")");
      }
    }
    double change = 0.0;
    for (std::size_t u = 0; u < m; ++u)
      for (std::size_t v = 0; v < m; ++v) {
        const double d = left[u] * right[v] - prev_left[u] * prev_right[v];
        change += d * d;
      }
    change = std::sqrt(change);
    result.trace.push_back(change);
    result.iterations = iter;
    if (change < cfg.tol) {
      result.converged = true;
      break;
    }
  }
  if (!result.converged) {
    throw Error(ErrorCode::ConvergenceFailed,
                "rank-one iteration did not settle within " + std::to_string(cfg.max_iters) + " iterations");
  }

  double norm_left = 0.0, norm_right = 0.0;
  for (std::size_t w = 0; w < m; ++w) {
    norm_left += left[w] * left[w];
    norm_right += right[w] * right[w];
  }
  const double scale = std::sqrt(std::sqrt(norm_left) / std::sqrt(norm_right));
  std::vector<double> skill(m);
  double sum = 0.0;
  for (std::size_t w = 0; w < m; ++w) sum += (skill[w] = left[w] / scale);
  // Sign is unidentifiable from s_i * s_j; assume the crowd is better than chance.
  if (sum < 0.0)
    for (double& x : skill) x = -x;

  const double eps = 1e-6;
  std::vector<double> weights(m);
  result.skill_kind = "accuracy";
  for (std::size_t w = 0; w < m; ++w) {
    const double s = std::clamp(skill[w], -1.0, 1.0);
    const double p = std::clamp((1.0 + (kd - 1.0) * s) / kd, eps, 1.0 - eps);
    weights[w] = std::log((kd - 1.0) * p / (1.0 - p));
    result.worker_skill.push_back({p});
  }

  std::vector<double> row(k);
  for (std::size_t i = 0; i < matrix.num_items(); ++i) {
    std::fill(row.begin(), row.end(), 0.0);
    for (const auto& cell : matrix.item_cells(i)) row[cell.label] += weights[cell.worker];
    detail::normalize_log_row(row);
    result.posteriors.push_back(row);
  }
  result.labels = detail::decide(result.posteriors, matrix.categories());
  result.metadata["trim"] = std::to_string(trim);
  result.seed = cfg.seed;
  return result;
}

}  // namespace truthkit
