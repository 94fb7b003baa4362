#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "truthkit/core.hpp"

namespace truthkit {

enum class Algorithm { MajorityVote, DawidSkene, OneCoin, Glad, Mace, Mmsr, Wawa, Zbs };

std::string_view algorithm_name(Algorithm algorithm) noexcept;  // "mv", "ds", "onecoin", ...
Algorithm parse_algorithm(std::string_view text);
const std::vector<Algorithm>& all_algorithms();

struct EmConfig {
  int max_iters = 100;
  /// Convergence threshold on the largest absolute change of any item posterior
  /// (relative objective change for GLAD, Frobenius change for M-MSR, skill
  /// change for ZBS).
  double tol = 1e-6;
  /// Laplace pseudo-count added to every count-based M-step estimate.
  double smoothing = 0.01;
  std::uint64_t seed = 0;

  void validate() const;  // InvalidArgument
};

struct GladLearning {
  double rate = 0.1;
  /// Gradient-ascent steps per M-step.
  int max_iters = 25;
};

struct AggregationOptions {
  EmConfig em;
  GladLearning glad;
  int mace_restarts = 10;
};

/// Consensus labels, per-item posteriors and per-worker diagnostics.
///
/// `worker_skill[w]` depends on `skill_kind`:
///   "confusion_matrix"  K*K row-major, row = true class, column = reported label
///   "accuracy"          {p_w}
///   "ability"           {alpha_w}
///   "spam_probability"  {1 - theta_w, spam label distribution (K values)...}
///   "agreement_weight"  {weight_w}
///   "none"              {}
struct AggregationResult {
  Algorithm algorithm = Algorithm::MajorityVote;
  CategorySet categories = CategorySet::coda19();
  std::vector<std::string> items;
  std::vector<LabelIndex> labels;
  std::vector<std::vector<double>> posteriors;
  std::vector<std::string> workers;
  std::string skill_kind = "none";
  std::vector<std::vector<double>> worker_skill;
  std::vector<double> class_priors;
  /// GLAD inverse item difficulty (beta_i > 0); empty otherwise.
  std::vector<double> item_difficulty;
  /// Objective per iteration (log-posterior for the EM family and GLAD,
  /// Frobenius change for M-MSR, max skill change for ZBS).
  std::vector<double> trace;
  /// MACE: one objective trace per random restart; `trace` is the winner's.
  std::vector<std::vector<double>> restart_traces;
  std::vector<std::string> warnings;
  std::map<std::string, std::string> metadata;
  std::uint64_t seed = 0;
  int iterations = 0;
  bool converged = true;

  LabelAssignment assignment() const;
  std::optional<std::size_t> find_worker(std::string_view worker_id) const;
};

AggregationResult aggregate_majority_vote(const LabelMatrix& matrix);
AggregationResult aggregate_dawid_skene(const LabelMatrix& matrix, const EmConfig& cfg);
AggregationResult aggregate_one_coin(const LabelMatrix& matrix, const EmConfig& cfg);
AggregationResult aggregate_glad(const LabelMatrix& matrix, const EmConfig& cfg,
                                 const GladLearning& learning = {});
AggregationResult aggregate_mace(const LabelMatrix& matrix, const EmConfig& cfg, int restarts = 10);
/// Throws TooFewWorkers below two workers and ConvergenceFailed when the
/// rank-one iteration degenerates or stalls; fewer than ten workers only adds
/// a warning.
AggregationResult aggregate_mmsr(const LabelMatrix& matrix, const EmConfig& cfg);
AggregationResult aggregate_wawa(const LabelMatrix& matrix);
AggregationResult aggregate_zbs(const LabelMatrix& matrix, const EmConfig& cfg);

AggregationResult aggregate(Algorithm algorithm, const LabelMatrix& matrix,
                            const AggregationOptions& options = {});

/// Zero-Based Skill aggregation that absorbs new labels one at a time. The
/// stream keeps the whole batch trajectory (consensus and skills per
/// iteration) and pushes each new record through it, re-scoring only items
/// whose voters changed skill at that iteration. The outcome is the batch fit
/// of the enlarged matrix, including which fixed point is reached.
class ZbsStream {
 public:
  ZbsStream(CategorySet categories, EmConfig cfg);
  static ZbsStream from_matrix(const LabelMatrix& matrix, const EmConfig& cfg);

  /// DuplicateCell / UnknownLabel as for matrix construction.
  void add(const LabelRecord& record);
  AggregationResult result() const;

  std::size_t num_items() const noexcept { return item_ids_.size(); }
  std::size_t num_workers() const noexcept { return worker_ids_.size(); }
  /// Item re-scorings performed by add() since construction, for diagnostics.
  std::size_t rescored_items() const noexcept { return rescored_; }

 private:
  struct Vote {
    std::size_t worker;
    LabelIndex label;
  };

  std::size_t intern_item(const std::string& id);
  std::size_t intern_worker(const std::string& id);
  LabelIndex vote(std::size_t item, const std::vector<double>& skills) const;
  double max_change(std::size_t level) const;
  bool stops_after(std::size_t level) const;
  void rebuild();

  CategorySet categories_;
  EmConfig cfg_;
  std::map<std::string, std::size_t> item_index_;
  std::map<std::string, std::size_t> worker_index_;
  std::vector<std::string> item_ids_;
  std::vector<std::string> worker_ids_;
  std::vector<std::vector<Vote>> item_votes_;  // sorted by worker id, like matrix cells
  std::vector<std::vector<std::size_t>> worker_items_;
  // Iteration t computes consensus_[t] from skills_[t]; skills_[t + 1] is the
  // agreement rate with it, agree_[t] the underlying counts.
  std::vector<std::vector<double>> skills_;
  std::vector<std::vector<LabelIndex>> consensus_;
  std::vector<std::vector<std::size_t>> agree_;
  std::size_t rescored_ = 0;
};

}  // namespace truthkit
