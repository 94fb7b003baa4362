#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "truthkit/core.hpp"

namespace truthkit {

/// counts[gold][predicted]
using ConfusionCounts = std::vector<std::vector<long long>>;

/// Tallies over the gold items; predictions for items without gold are
/// ignored. Throws MissingPrediction listing gold items with no prediction.
ConfusionCounts confusion_matrix(const LabelAssignment& pred, const GoldLabels& gold,
                                 const CategorySet& categories);
/// Each row divided by its total (all-zero rows stay zero).
std::vector<std::vector<double>> row_normalized(const ConfusionCounts& counts);

struct ClassScores {
  std::optional<double> precision;  // absent when never predicted
  std::optional<double> recall;     // absent when absent from gold
  std::optional<double> f1;         // absent when either side is absent
};

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

struct MetricsReport {
  double accuracy = 0.0;
  std::vector<ClassScores> per_class;  // indexed like the category set
  double kappa = 0.0;
  ConfusionCounts confusion;
  Interval accuracy_ci95;
  long long n = 0;
};

MetricsReport metrics_from_confusion(const ConfusionCounts& confusion);
MetricsReport metrics(const LabelAssignment& pred, const GoldLabels& gold, const CategorySet& categories);

/// Cohen's kappa (po - pe) / (1 - pe); 1 when both raters use a single class.
double cohen_kappa(const ConfusionCounts& confusion);

enum class IntervalMethod { Wald, Wilson };

/// Normal-approximation interval acc +/- z * sqrt(acc (1 - acc) / n), clamped
/// to [0, 1]. Wilson is available but never the default.
Interval wald_ci(double accuracy, long long n, double confidence = 0.95,
                 IntervalMethod method = IntervalMethod::Wald);

/// Two-sided standard normal quantile for `confidence` (1.959964 at 0.95).
double normal_critical_value(double confidence);

/// Half-up rounding to three decimals, as printed in reports.
double round3(double value);

enum class TestLevel { Sentence, Article };
enum class TestStatus { Ok, ZeroVariance };

struct TTestResult {
  TestStatus status = TestStatus::Ok;
  double t = 0.0;
  double p = 1.0;
  long long n = 0;
  double mean_difference = 0.0;
};

/// Two-tailed paired t-test on aligned per-unit scores. Identical
/// differences yield status ZeroVariance with t and p left unset (0 / 1).
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

/// Article level first averages each side's scores within an article, ordered
/// by article id. `units` names the item behind each score.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b, TestLevel level,
                          std::span<const std::string> units, const ArticleMap* articles);

/// Per-item 0/1 correctness over the gold items, in gold order.
std::vector<double> correctness(const LabelAssignment& pred, const GoldLabels& gold);

struct FlipCounts {
  long long to_correct = 0;
  long long to_incorrect = 0;
  long long neutral = 0;  // changed, wrong both before and after
};

struct FlipReport {
  std::vector<FlipCounts> per_class;  // by gold class
  FlipCounts total;
  long long base_correct = 0;
  long long fused_correct = 0;
};

/// Items where `fused` differs from `base`, bucketed by gold class. Throws
/// MissingPrediction if either prediction misses a gold item.
FlipReport flip_analysis(const LabelAssignment& base, const LabelAssignment& fused, const GoldLabels& gold,
                         const CategorySet& categories);

}  // namespace truthkit
