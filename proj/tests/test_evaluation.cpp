#include <doctest.h>

#include <cmath>
#include <numbers>

#include "truthkit/error.hpp"
#include "truthkit/evaluation.hpp"
#include "truthkit/rng.hpp"

using namespace truthkit;

namespace {

const CategorySet kCats = CategorySet::coda19();
const CategorySet kTwo({"no", "yes"}, {"yes", "no"});

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

LabelAssignment assign(const std::vector<std::string>& labels, const CategorySet& cats = kCats) {
  LabelAssignment out;
  for (std::size_t i = 0; i < labels.size(); ++i) out["i" + std::to_string(i)] = cats.index_of(labels[i]);
  return out;
}

/// Two-sided p-value of a t statistic with 3 degrees of freedom, closed form.
double t3_two_sided(double t) {
  const double x = std::abs(t) / std::sqrt(3.0);
  const double cdf = 0.5 + (x / (1 + x * x) + std::atan(x)) / std::numbers::pi;
  return 2 * (1 - cdf);
}

}  // namespace

TEST_CASE("confusion matrices") {
  std::vector<std::string> labels;
  for (int i = 0; i < 10; ++i) labels.push_back(kCats.name(static_cast<std::size_t>(i % 5)));
  const auto same = confusion_matrix(assign(labels), assign(labels), kCats);
  long long total = 0;
  for (std::size_t g = 0; g < 5; ++g)
    for (std::size_t p = 0; p < 5; ++p) {
      total += same[g][p];
      if (g != p) CHECK(same[g][p] == 0);
    }
  CHECK(total == 10);

  const auto flipped = confusion_matrix(assign({"yes", "no", "no"}, kTwo), assign({"no", "yes", "yes"}, kTwo), kTwo);
  CHECK(flipped == ConfusionCounts{{0, 1}, {2, 0}});

  // gold:  B P M F O ; pred: B M M O O
  const auto hand = confusion_matrix(assign({"Background", "Method", "Method", "Other", "Other"}),
                                     assign({"Background", "Purpose", "Method", "Finding", "Other"}), kCats);
  ConfusionCounts expected(5, std::vector<long long>(5, 0));
  expected[0][0] = 1;
  expected[1][2] = 1;
  expected[2][2] = 1;
  expected[3][4] = 1;
  expected[4][4] = 1;
  CHECK(hand == expected);

  const auto norm = row_normalized(ConfusionCounts{{3, 1}, {0, 0}});
  CHECK(norm[0][0] == doctest::Approx(0.75));
  CHECK(norm[1][1] == 0.0);

  auto missing_gold = assign({"Background", "Other"});
  auto partial_pred = assign({"Background"});
  CHECK(code_of([&] { confusion_matrix(partial_pred, missing_gold, kCats); }) == ErrorCode::MissingPrediction);
}

TEST_CASE("metrics") {
  const auto gold = assign({"Background", "Purpose", "Method", "Finding", "Other", "Method"});
  const auto perfect = metrics(gold, gold, kCats);
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.kappa == doctest::Approx(1.0));
  for (const auto& s : perfect.per_class) CHECK(*s.f1 == doctest::Approx(1.0));

  // Other is never predicted -> precision absent, recall 0, F1 absent.
  const auto pred = assign({"Background", "Purpose", "Method", "Finding", "Method", "Method"});
  const auto r = metrics(pred, gold, kCats);
  const auto& other = r.per_class[kCats.index_of("Other")];
  CHECK_FALSE(other.precision);
  CHECK(*other.recall == 0.0);
  CHECK_FALSE(other.f1);
  const auto& method = r.per_class[kCats.index_of("Method")];
  CHECK(*method.precision == doctest::Approx(2.0 / 3.0));
  CHECK(*method.recall == 1.0);
  CHECK(*method.f1 == doctest::Approx(0.8));
  CHECK(r.accuracy == doctest::Approx(5.0 / 6.0));
  CHECK(r.accuracy_ci95.low <= r.accuracy);
  CHECK(r.accuracy <= r.accuracy_ci95.high);
  CHECK(r.n == 6);
}

TEST_CASE("kappa") {
  CHECK(cohen_kappa({{40, 10}, {20, 30}}) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(metrics_from_confusion({{40, 10}, {20, 30}}).accuracy == doctest::Approx(0.7));
  CHECK(cohen_kappa({{7, 0}, {0, 0}}) == 1.0);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const std::size_t k = 2 + rng.below(4);
    ConfusionCounts c(k, std::vector<long long>(k));
    long long n = 0, trace = 0;
    for (std::size_t g = 0; g < k; ++g)
      for (std::size_t p = 0; p < k; ++p) {
        c[g][p] = static_cast<long long>(rng.below(20));
        n += c[g][p];
        if (g == p) trace += c[g][p];
      }
    if (n == 0) continue;
    const auto m = metrics_from_confusion(c);
    CHECK(m.accuracy == static_cast<double>(trace) / static_cast<double>(n));
    double pe = 0;
    for (std::size_t j = 0; j < k; ++j) {
      double row = 0, col = 0;
      for (std::size_t x = 0; x < k; ++x) {
        row += static_cast<double>(c[j][x]);
        col += static_cast<double>(c[x][j]);
      }
      pe += row * col / (static_cast<double>(n) * static_cast<double>(n));
    }
    if (pe < 1) CHECK(std::abs(m.kappa - (m.accuracy - pe) / (1 - pe)) < 1e-12);
  }
}

TEST_CASE("Wald intervals") {
  const auto a = wald_ci(2589.0 / 3177.0, 3177);
  CHECK(round3(a.low) == doctest::Approx(0.801));
  CHECK(round3(a.high) == doctest::Approx(0.828));
  const auto b = wald_ci(0.442, 3177);
  CHECK(round3(b.low) == doctest::Approx(0.425));
  CHECK(round3(b.high) == doctest::Approx(0.459));
  const auto one = wald_ci(1.0, 12);
  CHECK(one.low == 1.0);
  CHECK(one.high == 1.0);
  const auto zero = wald_ci(0.01, 5);
  CHECK(zero.low == 0.0);
  CHECK(normal_critical_value(0.95) == doctest::Approx(1.959964).epsilon(1e-6));
  for (double acc : {0.2, 0.5, 0.815}) {
    const auto w1 = wald_ci(acc, 400), w4 = wald_ci(acc, 1600);
    CHECK(std::abs((w1.high - w1.low) / (w4.high - w4.low) - 2.0) < 1e-9);
  }
  const auto wilson = wald_ci(1.0, 12, 0.95, IntervalMethod::Wilson);
  CHECK(wilson.low < 1.0);
  CHECK(wilson.high == doctest::Approx(1.0));
  CHECK(round3(0.8285) == doctest::Approx(0.829));
  CHECK(round3(0.4245) == doctest::Approx(0.425));
}

TEST_CASE("paired t-test") {
  const std::vector<double> a{2, 4, 6, 8}, b{1, 5, 5, 9};
  const auto flat = paired_t_test(a, b);
  CHECK(flat.status == TestStatus::Ok);
  CHECK(flat.t == doctest::Approx(0.0));
  CHECK(flat.p == doctest::Approx(1.0));

  // Differences 1, 2, 2, 4: mean 2.25, sd sqrt(1.5833), t = 2.25 / (sd / 2).
  const std::vector<double> c{3, 6, 8, 12}, d{2, 4, 6, 8};
  const auto r = paired_t_test(c, d);
  const double sd = std::sqrt(((1 - 2.25) * (1 - 2.25) + 2 * (2 - 2.25) * (2 - 2.25) + (4 - 2.25) * (4 - 2.25)) / 3);
  const double t = 2.25 / (sd / 2);
  CHECK(r.t == doctest::Approx(t).epsilon(1e-12));
  CHECK(r.p == doctest::Approx(t3_two_sided(t)).epsilon(1e-9));
  CHECK(r.n == 4);
  CHECK(r.mean_difference == doctest::Approx(2.25));

  CHECK(paired_t_test(a, a).status == TestStatus::ZeroVariance);
  const std::vector<double> e{.9, .8, .7, .6}, f{.85, .75, .65, .55};
  CHECK(paired_t_test(e, f).status == TestStatus::ZeroVariance);
  CHECK(code_of([&] { paired_t_test(std::vector<double>{1}, std::vector<double>{2}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { paired_t_test(a, std::vector<double>{1, 2}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("article-level t-test averages within articles") {
  const std::vector<std::string> units{"s1", "s2", "s3", "s4", "s5", "s6"};
  const ArticleMap articles{{"s1", "A"}, {"s2", "A"}, {"s3", "B"}, {"s4", "B"}, {"s5", "C"}, {"s6", "C"}};
  const std::vector<double> a{1, 0, 1, 1, 0, 1}, b{0, 0, 1, 0, 0, 0};
  const auto r = paired_t_test(a, b, TestLevel::Article, units, &articles);
  // Article means: A .5 vs 0, B 1 vs .5, C .5 vs 0 -> all differences .5.
  CHECK(r.status == TestStatus::ZeroVariance);
  CHECK(r.n == 3);
  const std::vector<double> b2{0, 0, 1, 1, 0, 0};
  const auto r2 = paired_t_test(a, b2, TestLevel::Article, units, &articles);
  const auto direct = paired_t_test(std::vector<double>{.5, 1, .5}, std::vector<double>{0, 1, 0});
  CHECK(r2.t == doctest::Approx(direct.t));
  CHECK(r2.p == doctest::Approx(direct.p));
  CHECK(code_of([&] { paired_t_test(a, b, TestLevel::Article, units, nullptr); }) == ErrorCode::InvalidArgument);
  const ArticleMap partial{{"s1", "A"}};
  CHECK(code_of([&] { paired_t_test(a, b, TestLevel::Article, units, &partial); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("flip analysis") {
  const auto gold = assign({"Background", "Purpose", "Method", "Finding", "Other"});
  CHECK(flip_analysis(gold, gold, gold, kCats).total.to_correct == 0);

  // item1 flips to correct (Purpose), item3 flips to incorrect (Finding),
  // item4 changes between two wrong labels (neutral).
  const auto base = assign({"Background", "Method", "Method", "Finding", "Method"});
  const auto fused = assign({"Background", "Purpose", "Method", "Other", "Purpose"});
  const auto r = flip_analysis(base, fused, gold, kCats);
  CHECK(r.per_class[kCats.index_of("Purpose")].to_correct == 1);
  CHECK(r.per_class[kCats.index_of("Finding")].to_incorrect == 1);
  CHECK(r.per_class[kCats.index_of("Other")].neutral == 1);
  CHECK(r.total.to_correct == 1);
  CHECK(r.total.to_incorrect == 1);
  CHECK(r.total.neutral == 1);
  CHECK(r.total.to_correct - r.total.to_incorrect == r.fused_correct - r.base_correct);

  const auto wrong = assign({"Other", "Other", "Other", "Other", "Background"});
  const auto all = flip_analysis(wrong, gold, gold, kCats);
  CHECK(all.total.to_correct == 5);
  CHECK(all.total.to_incorrect == 0);

  CHECK(code_of([&] { flip_analysis(assign({"Other"}), gold, gold, kCats); }) == ErrorCode::MissingPrediction);
}

TEST_CASE("flip accounting identity on random predictions") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    LabelAssignment gold, base, fused;
    for (int i = 0; i < 50; ++i) {
      const auto id = "i" + std::to_string(i);
      gold[id] = rng.below(5);
      base[id] = rng.bernoulli(0.6) ? gold[id] : rng.below(5);
      fused[id] = rng.bernoulli(0.5) ? base[id] : rng.below(5);
    }
    const auto r = flip_analysis(base, fused, gold, kCats);
    CHECK(r.total.to_correct - r.total.to_incorrect == r.fused_correct - r.base_correct);
  }
}
