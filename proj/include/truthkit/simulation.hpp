#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "truthkit/aggregation.hpp"
#include "truthkit/cleaning.hpp"
#include "truthkit/core.hpp"

namespace truthkit {

enum class SampleMode {
  PerItem,  // each item keeps n of its own labels, drawn uniformly
  Global,   // one random worker order; each item keeps its first n workers in it
};

std::string_view sample_mode_name(SampleMode mode) noexcept;
SampleMode parse_sample_mode(std::string_view text);

struct SimulationPlan {
  std::vector<int> worker_counts;
  int rounds = 20;
  std::vector<Algorithm> algorithms;
  CleaningStrategy cleaning = CleaningStrategy::All;
  bool include_llm = false;
  std::uint64_t master_seed = 0;
  int mmsr_retry_limit = 5;
  SampleMode sample_mode = SampleMode::PerItem;
  AggregationOptions options;
  /// Concurrent rounds; 0 picks the hardware concurrency.
  int threads = 0;

  void validate() const;  // InvalidArgument
};

struct CurvePoint {
  Algorithm algorithm = Algorithm::MajorityVote;
  int worker_count = 0;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // sample standard deviation; 0 for one round
  std::vector<double> round_accuracies;
  int failures = 0;  // rounds abandoned after exhausting retries
  int retries = 0;   // resamples triggered by ConvergenceFailed
};

struct SimulationCurve {
  bool include_llm = false;
  CleaningStrategy cleaning = CleaningStrategy::All;
  SampleMode sample_mode = SampleMode::PerItem;
  std::vector<CurvePoint> points;  // algorithm-major, then worker count
};

/// Keeps n labels per item. Throws InsufficientLabels naming items with fewer
/// than n labels, InvalidArgument for n < 1.
LabelMatrix subsample_round(const LabelMatrix& matrix, int n, std::uint64_t seed,
                            SampleMode mode = SampleMode::PerItem);

/// Seed of one (algorithm, worker count, round, attempt) cell.
std::uint64_t round_seed(std::uint64_t master_seed, Algorithm algorithm, int worker_count, int round, int attempt);

/// Accuracy of `pred` over the gold items it covers.
double covered_accuracy(const LabelAssignment& pred, const GoldLabels& gold);

/// Accuracy-vs-worker-count curves. With include_llm the LLM labels are
/// injected as one extra worker on top of the n sampled humans (n = 0 scores
/// the LLM alone). ConvergenceFailed triggers a resample with a fresh derived
/// seed up to mmsr_retry_limit times; after that the round counts as a failure
/// and is left out of the mean.
SimulationCurve run_curve(const LabelMatrix& matrix, const GoldLabels& gold, const SimulationPlan& plan,
                          const std::map<std::string, std::optional<LabelIndex>>* llm_labels = nullptr,
                          const std::string& llm_worker_id = "llm");

}  // namespace truthkit
