#include "truthkit/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "truthkit/error.hpp"
#include "truthkit/llm.hpp"
#include "truthkit/rng.hpp"

namespace truthkit {

std::string_view sample_mode_name(SampleMode mode) noexcept {
  return mode == SampleMode::Global ? "global" : "per-item";
}

SampleMode parse_sample_mode(std::string_view text) {
  if (text == "per-item") return SampleMode::PerItem;
  if (text == "global") return SampleMode::Global;
  throw Error(ErrorCode::InvalidArgument, "sample mode must be per-item or global");
}

void SimulationPlan::validate() const {
  if (rounds < 1) throw Error(ErrorCode::InvalidArgument, "rounds must be >= 1");
  if (worker_counts.empty()) throw Error(ErrorCode::InvalidArgument, "plan lists no worker counts");
  if (algorithms.empty()) throw Error(ErrorCode::InvalidArgument, "plan lists no algorithms");
  if (mmsr_retry_limit < 0) throw Error(ErrorCode::InvalidArgument, "mmsr_retry_limit must be >= 0");
  for (int n : worker_counts) {
    if (n < 0 || (n == 0 && !include_llm))
      throw Error(ErrorCode::InvalidArgument, "worker counts must be positive (0 only with include_llm)");
  }
  options.em.validate();
}

LabelMatrix subsample_round(const LabelMatrix& matrix, int n, std::uint64_t seed, SampleMode mode) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "subsample size must be >= 1");
  const auto want = static_cast<std::size_t>(n);
  std::string deficient;
  std::size_t short_items = 0;
  for (std::size_t i = 0; i < matrix.num_items(); ++i) {
    if (matrix.item_cells(i).size() >= want) continue;
    if (short_items < 10) deficient += (short_items ? ", " : "") + matrix.items()[i];
    ++short_items;
  }
  if (short_items) {
    throw Error(ErrorCode::InsufficientLabels, std::to_string(short_items) + " item(s) have fewer than " +
                                                   std::to_string(n) + " labels: " + deficient +
                                                   (short_items > 10 ? ", ..." : ""));
  }

  Rng rng(seed);
  std::vector<LabelRecord> kept;
  const auto& cats = matrix.categories();
  auto keep = [&](const Cell& cell) {
    kept.push_back({matrix.items()[cell.item], matrix.workers()[cell.worker], 0, cats.name(cell.label),
                    matrix.worker_source(cell.worker), std::nullopt});
  };
  if (mode == SampleMode::PerItem) {
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < matrix.num_items(); ++i) {
      const auto cells = matrix.item_cells(i);
      order.resize(cells.size());
      for (std::size_t c = 0; c < cells.size(); ++c) order[c] = c;
      // Partial Fisher-Yates: the first `want` slots are a uniform sample.
      for (std::size_t c = 0; c < want; ++c) std::swap(order[c], order[c + rng.below(cells.size() - c)]);
      std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(want));
      for (std::size_t c = 0; c < want; ++c) keep(cells[order[c]]);
    }
  } else {
    std::vector<std::size_t> rank(matrix.num_workers());
    std::vector<std::size_t> perm(matrix.num_workers());
    for (std::size_t w = 0; w < perm.size(); ++w) perm[w] = w;
    rng.shuffle(perm);
    for (std::size_t r = 0; r < perm.size(); ++r) rank[perm[r]] = r;
    std::vector<Cell> cells;
    for (std::size_t i = 0; i < matrix.num_items(); ++i) {
      const auto item = matrix.item_cells(i);
      cells.assign(item.begin(), item.end());
      std::sort(cells.begin(), cells.end(), [&](const Cell& a, const Cell& b) { return rank[a.worker] < rank[b.worker]; });
      for (std::size_t c = 0; c < want; ++c) keep(cells[c]);
    }
  }
  return build_label_matrix(kept, cats);
}

std::uint64_t round_seed(std::uint64_t master_seed, Algorithm algorithm, int worker_count, int round, int attempt) {
  return derive_seed(master_seed, algorithm_name(algorithm),
                     {static_cast<std::uint64_t>(worker_count), static_cast<std::uint64_t>(round),
                      static_cast<std::uint64_t>(attempt)});
}

double covered_accuracy(const LabelAssignment& pred, const GoldLabels& gold) {
  long long n = 0, correct = 0;
  for (const auto& [item, g] : gold) {
    auto it = pred.find(item);
    if (it == pred.end()) continue;
    ++n;
    if (it->second == g) ++correct;
  }
  if (n == 0) throw Error(ErrorCode::MissingPrediction, "no gold item is covered by the prediction");
  return static_cast<double>(correct) / static_cast<double>(n);
}

namespace {

struct RoundOutcome {
  std::optional<double> accuracy;
  int retries = 0;
};

}  // namespace

SimulationCurve run_curve(const LabelMatrix& matrix, const GoldLabels& gold, const SimulationPlan& plan,
                          const std::map<std::string, std::optional<LabelIndex>>* llm_labels,
                          const std::string& llm_worker_id) {
  plan.validate();
  if (plan.include_llm && !llm_labels)
    throw Error(ErrorCode::InvalidArgument, "include_llm needs LLM labels");

  struct Task {
    std::size_t algorithm;
    std::size_t count;
    int round;
  };
  std::vector<Task> tasks;
  for (std::size_t a = 0; a < plan.algorithms.size(); ++a)
    for (std::size_t c = 0; c < plan.worker_counts.size(); ++c)
      for (int r = 0; r < plan.rounds; ++r) tasks.push_back({a, c, r});

  // Fail on deficient items before spending any work.
  for (int n : plan.worker_counts)
    if (n > 0) subsample_round(matrix, n, 0, plan.sample_mode);

  std::optional<LabelMatrix> llm_only;
  if (plan.include_llm) llm_only = build_label_matrix(llm_label_records(*llm_labels, llm_worker_id, matrix.categories()),
                                                      matrix.categories());

  std::vector<RoundOutcome> outcomes(tasks.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_lock;
  std::exception_ptr error;
  auto work = [&] {
    for (;;) {
      const std::size_t t = next++;
      if (t >= tasks.size()) return;
      const auto& task = tasks[t];
      const Algorithm algorithm = plan.algorithms[task.algorithm];
      const int n = plan.worker_counts[task.count];
      try {
        auto& out = outcomes[t];
        for (int attempt = 0;; ++attempt) {
          const std::uint64_t seed = round_seed(plan.master_seed, algorithm, n, task.round, attempt);
          AggregationOptions options = plan.options;
          options.em.seed = seed;
          try {
            LabelMatrix sample = n == 0 ? *llm_only : subsample_round(matrix, n, seed, plan.sample_mode);
            if (plan.include_llm && n > 0) sample = inject_as_worker(sample, *llm_labels, llm_worker_id);
            out.accuracy = covered_accuracy(aggregate(algorithm, sample, options).assignment(), gold);
            break;
          } catch (const Error& e) {
            if (e.code() != ErrorCode::ConvergenceFailed) throw;
            if (attempt >= plan.mmsr_retry_limit) break;
            ++out.retries;
          }
        }
      } catch (...) {
        std::lock_guard lock(error_lock);
        if (!error) error = std::current_exception();
        next = tasks.size();
        return;
      }
    }
  };
  std::size_t threads = plan.threads > 0 ? static_cast<std::size_t>(plan.threads)
                                         : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, tasks.size());
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);

  SimulationCurve curve;
  curve.include_llm = plan.include_llm;
  curve.cleaning = plan.cleaning;
  curve.sample_mode = plan.sample_mode;
  std::size_t t = 0;
  for (std::size_t a = 0; a < plan.algorithms.size(); ++a) {
    for (std::size_t c = 0; c < plan.worker_counts.size(); ++c) {
      CurvePoint point;
      point.algorithm = plan.algorithms[a];
      point.worker_count = plan.worker_counts[c];
      for (int r = 0; r < plan.rounds; ++r, ++t) {
        point.retries += outcomes[t].retries;
        if (outcomes[t].accuracy) point.round_accuracies.push_back(*outcomes[t].accuracy);
        else ++point.failures;
      }
      const auto& acc = point.round_accuracies;
      if (!acc.empty()) {
        double sum = 0.0;
        for (double x : acc) sum += x;
        point.mean_accuracy = sum / static_cast<double>(acc.size());
        if (acc.size() > 1) {
          double ss = 0.0;
          for (double x : acc) ss += (x - point.mean_accuracy) * (x - point.mean_accuracy);
          point.std_accuracy = std::sqrt(ss / static_cast<double>(acc.size() - 1));
        }
      }
      curve.points.push_back(std::move(point));
    }
  }
  return curve;
}

}  // namespace truthkit
