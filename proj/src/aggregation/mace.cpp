// MACE: each worker answers faithfully with probability theta_w and otherwise
// "spams" a label drawn from a personal distribution xi_w. True labels have a
// uniform prior. Fit by MAP-EM from random restarts; the restart with the
// highest final objective wins.

#include <algorithm>
#include <functional>

#include "common.hpp"
#include "truthkit/rng.hpp"

namespace truthkit {

namespace {

struct MaceFit {
  detail::Matrix posteriors;
  std::vector<double> theta;
  std::vector<std::vector<double>> spam;
  std::vector<double> trace;
  int iterations = 0;
  bool converged = false;
};

MaceFit fit_restart(const LabelMatrix& matrix, const EmConfig& cfg, int restart) {
  const std::size_t n = matrix.num_items();
  const std::size_t m = matrix.num_workers();
  const std::size_t k = matrix.num_categories();
  const double s = cfg.smoothing;
  const double log_uniform = -std::log(static_cast<double>(k));

  MaceFit fit;
  fit.theta.resize(m);
  fit.spam.assign(m, std::vector<double>(k));
  // Initial parameters are keyed by worker id, not position, so relabeling
  // workers permutes the fit instead of changing it.
  for (std::size_t w = 0; w < m; ++w) {
    Rng rng(derive_seed(cfg.seed, matrix.workers()[w], {static_cast<std::uint64_t>(restart)}));
    fit.theta[w] = rng.uniform(0.05, 0.95);
    double total = 0.0;
    for (double& x : fit.spam[w]) total += (x = rng.uniform(0.1, 1.0));
    for (double& x : fit.spam[w]) x /= total;
  }
  fit.posteriors.assign(n, std::vector<double>(k));

  auto e_step = [&] {
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      auto& row = fit.posteriors[i];
      std::fill(row.begin(), row.end(), log_uniform);
      for (const auto& cell : matrix.item_cells(i)) {
        const double theta = fit.theta[cell.worker];
        const double spam = (1.0 - theta) * fit.spam[cell.worker][cell.label];
        const double match = std::log(theta + spam);
        const double miss = detail::safe_log(spam);
        for (std::size_t c = 0; c < k; ++c) row[c] += c == cell.label ? match : miss;
      }
      ll += detail::normalize_log_row(row);
    }
    return ll;
  };
  auto log_prior = [&] {
    if (s <= 0.0) return 0.0;
    double lp = 0.0;
    for (std::size_t w = 0; w < m; ++w) {
      lp += s * (detail::safe_log(fit.theta[w]) + detail::safe_log(1.0 - fit.theta[w]));
      for (double x : fit.spam[w]) lp += s * detail::safe_log(x);
    }
    return lp;
  };

  double ll = e_step();
  fit.trace.push_back(ll + log_prior());
  std::vector<double> spam_counts(k);
  detail::Matrix previous;
  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    previous = fit.posteriors;
    for (std::size_t w = 0; w < m; ++w) {
      double faithful = 0.0;
      std::fill(spam_counts.begin(), spam_counts.end(), 0.0);
      for (std::size_t c : matrix.worker_cells(w)) {
        const auto& cell = matrix.cells()[c];
        const double theta = fit.theta[w];
        const double spam = (1.0 - theta) * fit.spam[w][cell.label];
        // P(faithful | reported label, data) = P(true = label) * theta / (theta + spam).
        const double f = previous[cell.item][cell.label] * theta / (theta + spam);
        faithful += f;
        spam_counts[cell.label] += 1.0 - f;
      }
      const double total = static_cast<double>(matrix.worker_cells(w).size());
      fit.theta[w] = detail::smoothed_ratio(faithful, total, s, 2, "MACE competence");
      double spam_total = 0.0;
      for (double x : spam_counts) spam_total += x;
      for (std::size_t l = 0; l < k; ++l)
        fit.spam[w][l] = detail::smoothed_ratio(spam_counts[l], spam_total, s, k, "MACE spam distribution");
    }
    ll = e_step();
    fit.trace.push_back(ll + log_prior());
    fit.iterations = iter;
    if (detail::max_abs_change(previous, fit.posteriors) < cfg.tol) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

}  // namespace

AggregationResult aggregate_mace(const LabelMatrix& matrix, const EmConfig& cfg, int restarts) {
  cfg.validate();
  if (restarts < 1) throw Error(ErrorCode::InvalidArgument, "MACE needs at least one restart");
  detail::require_labeled_items(matrix);

  auto result = detail::make_result(Algorithm::Mace, matrix);
  std::optional<MaceFit> best;
  for (int r = 0; r < restarts; ++r) {
    auto fit = fit_restart(matrix, cfg, r);
    result.restart_traces.push_back(fit.trace);
    if (!best || fit.trace.back() > best->trace.back()) best = std::move(fit);
  }

  result.labels = detail::decide(best->posteriors, matrix.categories());
  result.posteriors = std::move(best->posteriors);
  result.trace = std::move(best->trace);
  result.iterations = best->iterations;
  result.converged = best->converged;
  result.skill_kind = "spam_probability";
  for (std::size_t w = 0; w < matrix.num_workers(); ++w) {
    std::vector<double> skill{1.0 - best->theta[w]};
    skill.insert(skill.end(), best->spam[w].begin(), best->spam[w].end());
    result.worker_skill.push_back(std::move(skill));
  }
  result.class_priors.assign(matrix.num_categories(), 1.0 / static_cast<double>(matrix.num_categories()));
  result.metadata["restarts"] = std::to_string(restarts);
  result.seed = cfg.seed;
  return result;
}

}  // namespace truthkit
