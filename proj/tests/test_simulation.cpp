#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "synthetic.hpp"
#include "truthkit/error.hpp"
#include "truthkit/io.hpp"
#include "truthkit/llm.hpp"
#include "truthkit/report.hpp"
#include "truthkit/rng.hpp"
#include "truthkit/simulation.hpp"

using namespace truthkit;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

struct Fixture {
  synthetic::Planted data = synthetic::planted_crowd(1, {.items = 60, .workers = 12, .labels_per_item = 5});
  LabelMatrix matrix = build_label_matrix(data.records, data.categories);
};

}  // namespace

TEST_CASE("subsample_round") {
  Fixture f;
  const auto full = subsample_round(f.matrix, 5, 3);
  CHECK(full == f.matrix);

  for (auto mode : {SampleMode::PerItem, SampleMode::Global}) {
    const auto a = subsample_round(f.matrix, 2, 99, mode);
    const auto b = subsample_round(f.matrix, 2, 99, mode);
    CHECK(a == b);
    CHECK(a.num_items() == f.matrix.num_items());
    for (std::size_t i = 0; i < a.num_items(); ++i) CHECK(a.item_cells(i).size() == 2);
    // Every kept cell exists in the source matrix.
    for (const auto& c : a.cells()) {
      const auto item = *f.matrix.find_item(a.items()[c.item]);
      const auto worker = *f.matrix.find_worker(a.workers()[c.worker]);
      bool found = false;
      for (const auto& src : f.matrix.item_cells(item)) found = found || (src.worker == worker && src.label == c.label);
      CHECK(found);
    }
  }
  CHECK_FALSE(subsample_round(f.matrix, 2, 1) == subsample_round(f.matrix, 2, 2));

  const auto one = subsample_round(f.matrix, 1, 7);
  const auto mv = aggregate_majority_vote(one);
  for (std::size_t i = 0; i < one.num_items(); ++i) CHECK(mv.labels[i] == one.item_cells(i)[0].label);

  CHECK(code_of([&] { subsample_round(f.matrix, 6, 1); }) == ErrorCode::InsufficientLabels);
  CHECK(code_of([&] { subsample_round(f.matrix, 0, 1); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("per-item sampling is uniform over an item's labels") {
  std::vector<LabelRecord> r;
  for (int w = 0; w < 4; ++w) r.push_back({"x", "w" + std::to_string(w), 0, "Method", Source::Human, std::nullopt});
  const auto m = build_label_matrix(r, CategorySet::coda19());
  std::vector<int> hits(4, 0);
  for (std::uint64_t seed = 0; seed < 4000; ++seed) {
    const auto kept = subsample_round(m, 1, seed);
    ++hits[*m.find_worker(kept.workers()[kept.item_cells(0)[0].worker])];
  }
  for (int h : hits) CHECK(std::abs(h - 1000) < 120);
}

TEST_CASE("run_curve: single full round equals full-data accuracy") {
  Fixture f;
  SimulationPlan plan;
  plan.worker_counts = {5};
  plan.rounds = 1;
  plan.algorithms = {Algorithm::MajorityVote};
  const auto curve = run_curve(f.matrix, f.data.truth, plan);
  REQUIRE(curve.points.size() == 1);
  const auto expected = covered_accuracy(aggregate_majority_vote(f.matrix).assignment(), f.data.truth);
  CHECK(curve.points[0].mean_accuracy == expected);
  CHECK(curve.points[0].std_accuracy == 0.0);
}

TEST_CASE("run_curve: n = 0 with the LLM is LLM-only accuracy") {
  Fixture f;
  std::map<std::string, std::optional<LabelIndex>> llm;
  Rng rng(3);
  for (const auto& [item, label] : f.data.truth) llm[item] = rng.bernoulli(0.7) ? label : (label + 1) % 5;
  llm.begin()->second = std::nullopt;  // a parse failure stays unscored
  SimulationPlan plan;
  plan.worker_counts = {0, 2};
  plan.rounds = 3;
  plan.algorithms = {Algorithm::MajorityVote, Algorithm::OneCoin};
  plan.include_llm = true;
  const auto curve = run_curve(f.matrix, f.data.truth, plan, &llm);
  LabelAssignment parsed;
  for (const auto& [item, label] : llm)
    if (label) parsed[item] = *label;
  const double llm_only = covered_accuracy(parsed, f.data.truth);
  for (const auto& p : curve.points)
    if (p.worker_count == 0) CHECK(p.mean_accuracy == doctest::Approx(llm_only));
  CHECK(code_of([&] { run_curve(f.matrix, f.data.truth, plan); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("run_curve: accuracy rises with workers and the seed fixes everything") {
  double low = 0, high = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto data = synthetic::planted_crowd(seed, {.items = 100, .workers = 25, .labels_per_item = 20,
                                                      .min_accuracy = 0.4, .max_accuracy = 0.9});
    const auto m = build_label_matrix(data.records, data.categories);
    SimulationPlan plan;
    plan.worker_counts = {1, 20};
    plan.rounds = 2;
    plan.algorithms = {Algorithm::MajorityVote};
    plan.master_seed = seed;
    const auto curve = run_curve(m, data.truth, plan);
    low += curve.points[0].mean_accuracy / 20;
    high += curve.points[1].mean_accuracy / 20;
    for (const auto& p : curve.points) {
      CHECK(p.mean_accuracy >= *std::min_element(p.round_accuracies.begin(), p.round_accuracies.end()));
      CHECK(p.mean_accuracy <= *std::max_element(p.round_accuracies.begin(), p.round_accuracies.end()));
      CHECK(p.round_accuracies.size() + static_cast<std::size_t>(p.failures) == 2);
    }
  }
  CHECK(high >= low - 0.02);
  CHECK(high > low);

  Fixture f;
  SimulationPlan plan;
  plan.worker_counts = {1, 3};
  plan.rounds = 4;
  plan.algorithms = {Algorithm::MajorityVote, Algorithm::DawidSkene, Algorithm::Zbs};
  plan.master_seed = 11;
  plan.threads = 1;
  const auto serial = report::curve_to_json(run_curve(f.matrix, f.data.truth, plan)).dump();
  plan.threads = 4;
  CHECK(report::curve_to_json(run_curve(f.matrix, f.data.truth, plan)).dump() == serial);
  plan.master_seed = 12;
  CHECK(report::curve_to_json(run_curve(f.matrix, f.data.truth, plan)).dump() != serial);
}

TEST_CASE("run_curve retries M-MSR convergence failures") {
  // Pure-noise labels from 5 workers make the rank-one iteration stall often.
  std::vector<LabelRecord> r;
  GoldLabels gold;
  Rng rng(8);
  const auto cats = CategorySet::coda19();
  for (int i = 0; i < 12; ++i) {
    const auto item = "i" + std::to_string(i);
    gold[item] = rng.below(5);
    for (int w = 0; w < 5; ++w)
      r.push_back({item, "w" + std::to_string(w), 0, cats.name(rng.below(5)), Source::Human, std::nullopt});
  }
  const auto m = build_label_matrix(r, cats);
  SimulationPlan plan;
  plan.worker_counts = {4};
  plan.rounds = 10;
  plan.algorithms = {Algorithm::Mmsr};
  plan.mmsr_retry_limit = 2;
  const auto curve = run_curve(m, gold, plan);
  const auto& p = curve.points[0];
  CHECK(p.retries > 0);
  CHECK(p.round_accuracies.size() + static_cast<std::size_t>(p.failures) == 10);
  CHECK(p.retries <= 2 * 10);
}

TEST_CASE("plan validation and JSON round trip") {
  SimulationPlan plan;
  CHECK(code_of([&] { plan.validate(); }) == ErrorCode::InvalidArgument);
  plan.worker_counts = {0};
  plan.algorithms = {Algorithm::MajorityVote};
  CHECK(code_of([&] { plan.validate(); }) == ErrorCode::InvalidArgument);
  plan.include_llm = true;
  plan.validate();
  plan.rounds = 0;
  CHECK(code_of([&] { plan.validate(); }) == ErrorCode::InvalidArgument);

  const auto parsed = report::plan_from_json(nlohmann::json::parse(
      R"({"worker_counts":[1,3],"rounds":4,"algorithms":["mv","mmsr"],"cleaning":"exclude-batch","sample_mode":"global","master_seed":5})"));
  CHECK(parsed.worker_counts == std::vector<int>{1, 3});
  CHECK(parsed.algorithms == std::vector<Algorithm>{Algorithm::MajorityVote, Algorithm::Mmsr});
  CHECK(parsed.cleaning == CleaningStrategy::ExcludeByBatch);
  CHECK(parsed.sample_mode == SampleMode::Global);
  CHECK(parsed.mmsr_retry_limit == 5);
  CHECK(code_of([] { report::plan_from_json(nlohmann::json::parse(R"({"worker_count":[1]})")); }) ==
        ErrorCode::SchemaError);

  Fixture f;
  plan = parsed;
  plan.cleaning = CleaningStrategy::All;
  const auto curve = run_curve(f.matrix, f.data.truth, plan);
  const auto round_trip = report::curve_from_json(report::curve_to_json(curve));
  CHECK(report::curve_to_json(round_trip) == report::curve_to_json(curve));
  const auto csv = report::curve_to_csv(curve);
  CHECK(csv.rfind("algorithm,worker_count,mean_accuracy,std_accuracy,rounds_ok,failures\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}
