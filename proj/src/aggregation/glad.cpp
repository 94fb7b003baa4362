// GLAD: P(worker w labels item i correctly) = sigmoid(alpha_w * beta_i), with
// the remaining mass spread uniformly over the other K - 1 labels. beta_i is
// parameterized as exp(b_i) so it stays positive. Gaussian priors
// alpha ~ N(1, 1) and b ~ N(0, 1) keep unanimous data from running off to
// infinity. The M-step is a fixed number of gradient-ascent steps with
// per-parameter gradients averaged over that parameter's observations.

#include <algorithm>

#include "common.hpp"

namespace truthkit {

namespace {

double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

}  // namespace

AggregationResult aggregate_glad(const LabelMatrix& matrix, const EmConfig& cfg, const GladLearning& learning) {
  cfg.validate();
  if (!(learning.rate > 0.0) || learning.max_iters < 1)
    throw Error(ErrorCode::InvalidArgument, "GLAD learning rate must be > 0 and steps >= 1");
  detail::require_labeled_items(matrix);

  const std::size_t n = matrix.num_items();
  const std::size_t m = matrix.num_workers();
  const std::size_t k = matrix.num_categories();
  const double s = cfg.smoothing;
  const double log_wrong_share = k > 1 ? std::log(static_cast<double>(k - 1)) : 0.0;
  const auto cells = matrix.cells();

  std::vector<double> alpha(m, 1.0);
  std::vector<double> log_beta(n, 0.0);
  detail::Matrix post = detail::vote_frequencies(matrix);
  std::vector<double> priors(k, 1.0 / static_cast<double>(k));

  auto log_prior_density = [&] {
    double lp = 0.0;
    for (double a : alpha) lp -= 0.5 * (a - 1.0) * (a - 1.0);
    for (double b : log_beta) lp -= 0.5 * b * b;
    if (s > 0.0)
      for (double p : priors) lp += s * std::log(p);
    return lp;
  };

  // E-step; returns the observed-data log-likelihood.
  auto e_step = [&] {
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      auto& row = post[i];
      for (std::size_t c = 0; c < k; ++c) row[c] = std::log(priors[c]);
      const double beta = std::exp(log_beta[i]);
      for (const auto& cell : matrix.item_cells(i)) {
        const double x = alpha[cell.worker] * beta;
        const double right = log_sigmoid(x);
        const double wrong = log_sigmoid(-x) - log_wrong_share;
        for (std::size_t c = 0; c < k; ++c) row[c] += c == cell.label ? right : wrong;
      }
      ll += detail::normalize_log_row(row);
    }
    return ll;
  };

  auto result = detail::make_result(Algorithm::Glad, matrix);
  result.converged = false;
  double previous = e_step() + log_prior_density();
  result.trace.push_back(previous);

  std::vector<double> grad_alpha(m), grad_b(n);
  std::vector<std::size_t> worker_obs(m, 0), item_obs(n, 0);
  for (const auto& cell : cells) {
    ++worker_obs[cell.worker];
    ++item_obs[cell.item];
  }

  int decreases = 0;
  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    // M-step: class priors in closed form, then gradient ascent on the
    // expected complete-data log-posterior in (alpha, b).
    for (std::size_t c = 0; c < k; ++c) {
      double mass = 0.0;
      for (std::size_t i = 0; i < n; ++i) mass += post[i][c];
      priors[c] = detail::smoothed_ratio(mass, static_cast<double>(n), s, k, "class prior");
    }
    for (int step = 0; step < learning.max_iters; ++step) {
      for (std::size_t w = 0; w < m; ++w) grad_alpha[w] = -(alpha[w] - 1.0);
      for (std::size_t i = 0; i < n; ++i) grad_b[i] = -log_beta[i];
      for (const auto& cell : cells) {
        const double beta = std::exp(log_beta[cell.item]);
        const double x = alpha[cell.worker] * beta;
        const double residual = post[cell.item][cell.label] - sigmoid(x);
        grad_alpha[cell.worker] += residual * beta;
        grad_b[cell.item] += residual * x;
      }
      for (std::size_t w = 0; w < m; ++w)
        alpha[w] += learning.rate * grad_alpha[w] / static_cast<double>(worker_obs[w] + 1);
      for (std::size_t i = 0; i < n; ++i)
        log_beta[i] += learning.rate * grad_b[i] / static_cast<double>(item_obs[i] + 1);
    }

    const double objective = e_step() + log_prior_density();
    if (!std::isfinite(objective)) throw Error(ErrorCode::NonFinite, "GLAD objective is not finite");
    result.trace.push_back(objective);
    result.iterations = iter;
    decreases = objective < previous ? decreases + 1 : 0;
    if (decreases >= 5) {
      throw Error(ErrorCode::Diverged, "GLAD objective fell for 5 consecutive iterations; lower the learning rate");
    }
    const double change = std::abs(objective - previous);
    previous = objective;
    if (change < cfg.tol * std::max(1.0, std::abs(objective))) {
      result.converged = true;
      break;
    }
  }

  result.labels = detail::decide(post, matrix.categories());
  result.posteriors = std::move(post);
  result.class_priors = priors;
  result.skill_kind = "ability";
  for (double a : alpha) result.worker_skill.push_back({a});
  for (double b : log_beta) result.item_difficulty.push_back(std::exp(b));
  result.metadata["multiclass"] = k > 2 ? "uniform-error" : "binary";
  result.metadata["learning_rate"] = std::to_string(learning.rate);
  result.metadata["gradient_steps"] = std::to_string(learning.max_iters);
  result.seed = cfg.seed;
  return result;
}

}  // namespace truthkit
