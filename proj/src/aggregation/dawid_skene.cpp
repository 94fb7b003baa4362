// Dawid-Skene (full confusion matrices) and one-coin Dawid-Skene (one
// accuracy per worker, errors spread uniformly). Both are MAP-EM: the
// Laplace pseudo-count is a symmetric Dirichlet(1 + smoothing) prior, so the
// recorded objective (log-likelihood + log-prior) never decreases.

#include <functional>

#include "common.hpp"

namespace truthkit {

namespace {

using detail::Matrix;

/// Fills log P(reported l | true k) per worker as log_conf[w][k * K + l] and
/// returns the worker part of the log-prior.
using WorkerMStep = std::function<double(const LabelMatrix&, const Matrix& posteriors, double smoothing,
                                         std::vector<std::vector<double>>& log_conf)>;

struct EmFit {
  Matrix posteriors;
  std::vector<double> priors;
  std::vector<std::vector<double>> log_conf;
  std::vector<double> trace;
  int iterations = 0;
  bool converged = false;
};

EmFit run_em(const LabelMatrix& matrix, const EmConfig& cfg, const WorkerMStep& worker_m_step) {
  cfg.validate();
  detail::require_labeled_items(matrix);
  const std::size_t n = matrix.num_items();
  const std::size_t k = matrix.num_categories();
  const double s = cfg.smoothing;

  EmFit fit;
  fit.posteriors = detail::vote_frequencies(matrix);
  fit.priors.assign(k, 0.0);
  fit.log_conf.assign(matrix.num_workers(), std::vector<double>(k * k, 0.0));

  Matrix next(n, std::vector<double>(k));
  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    // M-step.
    double penalty = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      double mass = 0.0;
      for (std::size_t i = 0; i < n; ++i) mass += fit.posteriors[i][c];
      fit.priors[c] = detail::smoothed_ratio(mass, static_cast<double>(n), s, k, "class prior");
      if (s > 0.0) penalty += s * std::log(fit.priors[c]);
    }
    penalty += worker_m_step(matrix, fit.posteriors, s, fit.log_conf);

    // E-step.
    double log_likelihood = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      auto& row = next[i];
      for (std::size_t c = 0; c < k; ++c) row[c] = detail::safe_log(fit.priors[c]);
      for (const auto& cell : matrix.item_cells(i)) {
        const auto& lc = fit.log_conf[cell.worker];
        for (std::size_t c = 0; c < k; ++c) row[c] += lc[c * k + cell.label];
      }
      log_likelihood += detail::normalize_log_row(row);
    }
    fit.trace.push_back(log_likelihood + penalty);
    const double change = detail::max_abs_change(next, fit.posteriors);
    std::swap(fit.posteriors, next);
    fit.iterations = iter;
    if (change < cfg.tol) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

AggregationResult finish(Algorithm algorithm, const LabelMatrix& matrix, const EmConfig& cfg, EmFit fit) {
  auto result = detail::make_result(algorithm, matrix);
  result.labels = detail::decide(fit.posteriors, matrix.categories());
  result.posteriors = std::move(fit.posteriors);
  result.class_priors = std::move(fit.priors);
  result.trace = std::move(fit.trace);
  result.iterations = fit.iterations;
  result.converged = fit.converged;
  result.seed = cfg.seed;
  result.metadata["initialization"] = "majority-vote";
  return result;
}

}  // namespace

AggregationResult aggregate_dawid_skene(const LabelMatrix& matrix, const EmConfig& cfg) {
  const std::size_t k = matrix.num_categories();
  auto m_step = [k](const LabelMatrix& m, const Matrix& post, double s,
                    std::vector<std::vector<double>>& log_conf) {
    double penalty = 0.0;
    std::vector<double> counts(k * k);
    for (std::size_t w = 0; w < m.num_workers(); ++w) {
      std::fill(counts.begin(), counts.end(), 0.0);
      for (std::size_t c : m.worker_cells(w)) {
        const auto& cell = m.cells()[c];
        for (std::size_t t = 0; t < k; ++t) counts[t * k + cell.label] += post[cell.item][t];
      }
      for (std::size_t t = 0; t < k; ++t) {
        double row = 0.0;
        for (std::size_t l = 0; l < k; ++l) row += counts[t * k + l];
        for (std::size_t l = 0; l < k; ++l) {
          const double p = detail::smoothed_ratio(counts[t * k + l], row, s, k, "confusion row");
          log_conf[w][t * k + l] = detail::safe_log(p);
          if (s > 0.0) penalty += s * log_conf[w][t * k + l];
        }
      }
    }
    return penalty;
  };
  auto fit = run_em(matrix, cfg, m_step);
  std::vector<std::vector<double>> skills;
  for (const auto& lc : fit.log_conf) {
    std::vector<double> conf(lc.size());
    for (std::size_t j = 0; j < lc.size(); ++j) conf[j] = std::exp(lc[j]);
    skills.push_back(std::move(conf));
  }
  auto result = finish(Algorithm::DawidSkene, matrix, cfg, std::move(fit));
  result.skill_kind = "confusion_matrix";
  result.worker_skill = std::move(skills);
  return result;
}

AggregationResult aggregate_one_coin(const LabelMatrix& matrix, const EmConfig& cfg) {
  const std::size_t k = matrix.num_categories();
  std::vector<double> accuracy(matrix.num_workers(), 0.0);
  auto m_step = [k, &accuracy](const LabelMatrix& m, const Matrix& post, double s,
                               std::vector<std::vector<double>>& log_conf) {
    double penalty = 0.0;
    for (std::size_t w = 0; w < m.num_workers(); ++w) {
      double correct = 0.0;
      for (std::size_t c : m.worker_cells(w)) {
        const auto& cell = m.cells()[c];
        correct += post[cell.item][cell.label];
      }
      const double total = static_cast<double>(m.worker_cells(w).size());
      const double p = detail::smoothed_ratio(correct, total, s, 2, "worker accuracy");
      accuracy[w] = p;
      const double log_right = detail::safe_log(p);
      const double log_wrong = k > 1 ? detail::safe_log((1.0 - p) / static_cast<double>(k - 1))
                                     : -std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < k; ++t)
        for (std::size_t l = 0; l < k; ++l) log_conf[w][t * k + l] = t == l ? log_right : log_wrong;
      if (s > 0.0) penalty += s * (log_right + detail::safe_log(1.0 - p));
    }
    return penalty;
  };
  auto fit = run_em(matrix, cfg, m_step);
  auto result = finish(Algorithm::OneCoin, matrix, cfg, std::move(fit));
  result.skill_kind = "accuracy";
  for (double p : accuracy) result.worker_skill.push_back({p});
  return result;
}

}  // namespace truthkit
