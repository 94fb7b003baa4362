#include "truthkit/quality_control.hpp"

#include <algorithm>
#include <tuple>

#include "truthkit/error.hpp"

namespace truthkit {

namespace {

constexpr long long kReadingRate = 250;  // words (tokens) per minute
constexpr Money kBasePay = Money::from_cents(5);
constexpr Money kPerMinute = Money::from_cents(17);

struct Tally {
  long long labels = 0, agree = 0, rare = 0, gold = 0, gold_correct = 0;

  WorkerStats finish(const std::string& worker) const {
    WorkerStats s;
    s.worker_id = worker;
    s.n_labels = labels;
    s.n_gold_labels = gold;
    s.majority_agreement_rate = labels ? static_cast<double>(agree) / static_cast<double>(labels) : 0.0;
    s.rare_label_rate = labels ? static_cast<double>(rare) / static_cast<double>(labels) : 0.0;
    if (gold) s.accuracy_vs_partial_gold = static_cast<double>(gold_correct) / static_cast<double>(gold);
    return s;
  }
};

}  // namespace

QcReport worker_statistics(std::span<const LabelRecord> records, const GoldLabels& partial_gold,
                           std::string_view rare_label, const CategorySet& categories) {
  const LabelIndex rare = categories.index_of(rare_label);

  std::map<std::string, std::vector<long long>> votes;
  for (const auto& r : records) {
    auto& counts = votes[r.item_id];
    if (counts.empty()) counts.assign(categories.size(), 0);
    ++counts[categories.index_of(r.label)];
  }
  std::map<std::string, LabelIndex> majority;
  for (const auto& [item, counts] : votes)
    majority[item] = argmax_with_priority(std::span<const long long>(counts), categories);

  std::map<std::string, Tally> overall;
  std::map<std::pair<std::int64_t, std::string>, Tally> by_batch;
  for (const auto& r : records) {
    const LabelIndex label = categories.index_of(r.label);
    for (Tally* t : {&overall[r.worker_id], &by_batch[{r.batch_id, r.worker_id}]}) {
      ++t->labels;
      if (label == majority.at(r.item_id)) ++t->agree;
      if (label == rare) ++t->rare;
      if (auto g = partial_gold.find(r.item_id); g != partial_gold.end()) {
        ++t->gold;
        if (g->second == label) ++t->gold_correct;
      }
    }
  }

  QcReport report;
  for (const auto& [worker, tally] : overall) report.workers.push_back(tally.finish(worker));
  for (const auto& [key, tally] : by_batch) report.per_batch.push_back({key.first, tally.finish(key.second)});
  return report;
}

RankMetric parse_rank_metric(std::string_view text) {
  if (text == "accuracy") return RankMetric::Accuracy;
  if (text == "agreement") return RankMetric::Agreement;
  if (text == "rare_rate") return RankMetric::RareRate;
  throw Error(ErrorCode::InvalidArgument, "rank metric must be accuracy, agreement or rare_rate");
}

std::vector<std::string> rank_workers(std::span<const WorkerStats> stats, RankMetric metric, std::size_t k,
                                      RankEnd end) {
  std::vector<std::pair<double, const WorkerStats*>> keyed;
  for (const auto& s : stats) {
    switch (metric) {
      case RankMetric::Accuracy:
        if (s.accuracy_vs_partial_gold) keyed.push_back({*s.accuracy_vs_partial_gold, &s});
        break;
      case RankMetric::Agreement: keyed.push_back({s.majority_agreement_rate, &s}); break;
      case RankMetric::RareRate: keyed.push_back({s.rare_label_rate, &s}); break;
    }
  }
  std::stable_sort(keyed.begin(), keyed.end(), [end](const auto& a, const auto& b) {
    if (a.first != b.first) return end == RankEnd::Bottom ? a.first < b.first : a.first > b.first;
    return a.second->worker_id < b.second->worker_id;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < keyed.size() && i < k; ++i) out.push_back(keyed[i].second->worker_id);
  return out;
}

Payment estimate_payment(long long token_count) {
  if (token_count < 0) throw Error(ErrorCode::InvalidArgument, "token count must be non-negative");
  Payment p;
  p.minutes = std::max(1LL, (token_count + kReadingRate - 1) / kReadingRate);
  p.amount = kBasePay + kPerMinute * p.minutes;
  return p;
}

}  // namespace truthkit
