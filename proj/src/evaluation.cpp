#include "truthkit/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "truthkit/error.hpp"

namespace truthkit {

namespace {

void require_predictions(const LabelAssignment& pred, const GoldLabels& gold, std::string_view what) {
  std::string missing;
  std::size_t count = 0;
  for (const auto& [item, label] : gold) {
    if (pred.count(item)) continue;
    if (count < 10) missing += (count ? ", " : "") + item;
    ++count;
  }
  if (count) {
    throw Error(ErrorCode::MissingPrediction, std::string(what) + " has no label for " + std::to_string(count) +
                                                  " gold item(s): " + missing + (count > 10 ? ", ..." : ""));
  }
}

}  // namespace

ConfusionCounts confusion_matrix(const LabelAssignment& pred, const GoldLabels& gold,
                                 const CategorySet& categories) {
  require_predictions(pred, gold, "prediction");
  const std::size_t k = categories.size();
  ConfusionCounts counts(k, std::vector<long long>(k, 0));
  for (const auto& [item, g] : gold) ++counts.at(g).at(pred.at(item));
  return counts;
}

std::vector<std::vector<double>> row_normalized(const ConfusionCounts& counts) {
  std::vector<std::vector<double>> out;
  for (const auto& row : counts) {
    long long total = 0;
    for (long long c : row) total += c;
    std::vector<double> r(row.size(), 0.0);
    if (total > 0)
      for (std::size_t j = 0; j < row.size(); ++j) r[j] = static_cast<double>(row[j]) / static_cast<double>(total);
    out.push_back(std::move(r));
  }
  return out;
}

double cohen_kappa(const ConfusionCounts& confusion) {
  const std::size_t k = confusion.size();
  long long n = 0;
  long long diagonal = 0;
  std::vector<long long> rows(k, 0), cols(k, 0);
  for (std::size_t g = 0; g < k; ++g)
    for (std::size_t p = 0; p < k; ++p) {
      n += confusion[g][p];
      rows[g] += confusion[g][p];
      cols[p] += confusion[g][p];
      if (g == p) diagonal += confusion[g][p];
    }
  if (n == 0) return 0.0;
  // kappa = (n * diag - sum r_c c_c) / (n^2 - sum r_c c_c), in integers so the
  // only rounding is the final division.
  long long chance = 0;
  for (std::size_t c = 0; c < k; ++c) chance += rows[c] * cols[c];
  const long long denominator = n * n - chance;
  if (denominator <= 0) return 1.0;
  return static_cast<double>(n * diagonal - chance) / static_cast<double>(denominator);
}

MetricsReport metrics_from_confusion(const ConfusionCounts& confusion) {
  MetricsReport report;
  report.confusion = confusion;
  const std::size_t k = confusion.size();
  long long diagonal = 0;
  for (std::size_t g = 0; g < k; ++g)
    for (std::size_t p = 0; p < k; ++p) {
      report.n += confusion[g][p];
      if (g == p) diagonal += confusion[g][p];
    }
  report.accuracy = report.n ? static_cast<double>(diagonal) / static_cast<double>(report.n) : 0.0;
  report.kappa = cohen_kappa(confusion);
  for (std::size_t c = 0; c < k; ++c) {
    long long predicted = 0, actual = 0;
    for (std::size_t j = 0; j < k; ++j) {
      predicted += confusion[j][c];
      actual += confusion[c][j];
    }
    ClassScores scores;
    const double tp = static_cast<double>(confusion[c][c]);
    if (predicted > 0) scores.precision = tp / static_cast<double>(predicted);
    if (actual > 0) scores.recall = tp / static_cast<double>(actual);
    if (scores.precision && scores.recall) {
      const double sum = *scores.precision + *scores.recall;
      scores.f1 = sum > 0.0 ? 2.0 * *scores.precision * *scores.recall / sum : 0.0;
    }
    report.per_class.push_back(scores);
  }
  if (report.n > 0) report.accuracy_ci95 = wald_ci(report.accuracy, report.n);
  return report;
}

MetricsReport metrics(const LabelAssignment& pred, const GoldLabels& gold, const CategorySet& categories) {
  return metrics_from_confusion(confusion_matrix(pred, gold, categories));
}

double normal_critical_value(double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0))
    throw Error(ErrorCode::InvalidArgument, "confidence must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 + confidence / 2.0);
}

Interval wald_ci(double accuracy, long long n, double confidence, IntervalMethod method) {
  if (!(accuracy >= 0.0 && accuracy <= 1.0)) throw Error(ErrorCode::InvalidArgument, "accuracy must lie in [0, 1]");
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "interval needs n >= 1");
  const double z = normal_critical_value(confidence);
  const double nd = static_cast<double>(n);
  Interval ci;
  if (method == IntervalMethod::Wald) {
    const double half = z * std::sqrt(accuracy * (1.0 - accuracy) / nd);
    ci = {accuracy - half, accuracy + half};
  } else {
    const double z2 = z * z;
    const double center = (accuracy + z2 / (2.0 * nd)) / (1.0 + z2 / nd);
    const double half = z / (1.0 + z2 / nd) * std::sqrt(accuracy * (1.0 - accuracy) / nd + z2 / (4.0 * nd * nd));
    ci = {center - half, center + half};
  }
  ci.low = std::clamp(ci.low, 0.0, 1.0);
  ci.high = std::clamp(ci.high, 0.0, 1.0);
  return ci;
}

double round3(double value) {
  // The nudge keeps exact-decimal halves (0.8285 stored as 0.82849999...)
  // rounding the way they print.
  return std::floor(value * 1000.0 + 0.5 + 1e-9) / 1000.0;
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::InvalidArgument, "paired samples differ in length");
  if (a.size() < 2) throw Error(ErrorCode::InvalidArgument, "paired t-test needs at least two pairs");
  TTestResult result;
  result.n = static_cast<long long>(a.size());
  const double nd = static_cast<double>(a.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
  mean /= nd;
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  result.mean_difference = mean;
  const double sd = std::sqrt(ss / (nd - 1.0));
  // Differences that are all equal up to rounding noise.
  if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) {
    result.status = TestStatus::ZeroVariance;
    return result;
  }
  result.t = mean / (sd / std::sqrt(nd));
  const boost::math::students_t_distribution<double> dist(nd - 1.0);
  result.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(result.t)));
  return result;
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b, TestLevel level,
                          std::span<const std::string> units, const ArticleMap* articles) {
  if (level == TestLevel::Sentence) return paired_t_test(a, b);
  if (!articles) throw Error(ErrorCode::InvalidArgument, "article-level test needs an article map");
  if (units.size() != a.size() || a.size() != b.size())
    throw Error(ErrorCode::InvalidArgument, "article-level test needs one unit id per score");
  struct Sums {
    double a = 0.0, b = 0.0;
    std::size_t n = 0;
  };
  std::map<std::string, Sums> per_article;
  for (std::size_t i = 0; i < units.size(); ++i) {
    auto it = articles->find(units[i]);
    if (it == articles->end())
      throw Error(ErrorCode::InvalidArgument, "item '" + units[i] + "' has no article");
    auto& s = per_article[it->second];
    s.a += a[i];
    s.b += b[i];
    ++s.n;
  }
  std::vector<double> mean_a, mean_b;
  for (const auto& [article, s] : per_article) {
    mean_a.push_back(s.a / static_cast<double>(s.n));
    mean_b.push_back(s.b / static_cast<double>(s.n));
  }
  return paired_t_test(mean_a, mean_b);
}

std::vector<double> correctness(const LabelAssignment& pred, const GoldLabels& gold) {
  require_predictions(pred, gold, "prediction");
  std::vector<double> out;
  out.reserve(gold.size());
  for (const auto& [item, g] : gold) out.push_back(pred.at(item) == g ? 1.0 : 0.0);
  return out;
}

FlipReport flip_analysis(const LabelAssignment& base, const LabelAssignment& fused, const GoldLabels& gold,
                         const CategorySet& categories) {
  require_predictions(base, gold, "base prediction");
  require_predictions(fused, gold, "fused prediction");
  FlipReport report;
  report.per_class.assign(categories.size(), {});
  for (const auto& [item, g] : gold) {
    const LabelIndex b = base.at(item);
    const LabelIndex f = fused.at(item);
    if (b == g) ++report.base_correct;
    if (f == g) ++report.fused_correct;
    if (b == f) continue;
    auto& bucket = report.per_class.at(g);
    if (f == g) {
      ++bucket.to_correct;
      ++report.total.to_correct;
    } else if (b == g) {
      ++bucket.to_incorrect;
      ++report.total.to_incorrect;
    } else {
      ++bucket.neutral;
      ++report.total.neutral;
    }
  }
  return report;
}

}  // namespace truthkit
