// Zero-Based Skill: alternate skill-weighted voting and agreement-rate skills.

#include <algorithm>
#include <cmath>

#include "common.hpp"

namespace truthkit {

AggregationResult aggregate_zbs(const LabelMatrix& matrix, const EmConfig& cfg) {
  cfg.validate();
  detail::require_labeled_items(matrix);
  auto result = detail::make_result(Algorithm::Zbs, matrix);

  std::vector<double> skills(matrix.num_workers(), 1.0);
  result.converged = false;
  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    const auto consensus = detail::decide(detail::weighted_vote(matrix, skills), matrix.categories());
    auto next = detail::agreement_rates(matrix, consensus);
    double change = 0.0;
    for (std::size_t w = 0; w < skills.size(); ++w) change = std::max(change, std::abs(next[w] - skills[w]));
    skills = std::move(next);
    result.trace.push_back(change);
    result.iterations = iter;
    if (change < cfg.tol) {
      result.converged = true;
      break;
    }
  }

  result.posteriors = detail::weighted_vote(matrix, skills);
  result.labels = detail::decide(result.posteriors, matrix.categories());
  result.skill_kind = "accuracy";
  for (double s : skills) result.worker_skill.push_back({s});
  result.seed = cfg.seed;
  return result;
}

ZbsStream::ZbsStream(CategorySet categories, EmConfig cfg)
    : categories_(std::move(categories)), cfg_(cfg) {
  cfg_.validate();
  skills_.emplace_back();
}

ZbsStream ZbsStream::from_matrix(const LabelMatrix& matrix, const EmConfig& cfg) {
  ZbsStream stream(matrix.categories(), cfg);
  for (const auto& id : matrix.items()) stream.intern_item(id);
  for (const auto& id : matrix.workers()) stream.intern_worker(id);
  for (const auto& cell : matrix.cells()) {
    stream.item_votes_[cell.item].push_back({cell.worker, cell.label});
    stream.worker_items_[cell.worker].push_back(cell.item);
  }
  stream.rebuild();
  return stream;
}

std::size_t ZbsStream::intern_item(const std::string& id) {
  auto [it, inserted] = item_index_.emplace(id, item_ids_.size());
  if (inserted) {
    item_ids_.push_back(id);
    item_votes_.emplace_back();
    for (auto& level : consensus_) level.push_back(0);
  }
  return it->second;
}

std::size_t ZbsStream::intern_worker(const std::string& id) {
  auto [it, inserted] = worker_index_.emplace(id, worker_ids_.size());
  if (inserted) {
    worker_ids_.push_back(id);
    worker_items_.emplace_back();
    skills_[0].push_back(1.0);
    for (std::size_t t = 1; t < skills_.size(); ++t) skills_[t].push_back(0.0);
    for (auto& level : agree_) level.push_back(0);
  }
  return it->second;
}

LabelIndex ZbsStream::vote(std::size_t item, const std::vector<double>& skills) const {
  // Same arithmetic and summation order as the batch weighted vote.
  std::vector<double> scores(categories_.size(), 0.0);
  double total = 0.0;
  for (const auto& v : item_votes_[item]) {
    scores[v.label] += skills[v.worker];
    total += skills[v.worker];
  }
  if (total <= 0.0) {
    std::fill(scores.begin(), scores.end(), 0.0);
    for (const auto& v : item_votes_[item]) scores[v.label] += 1.0;
    total = static_cast<double>(item_votes_[item].size());
  }
  for (double& s : scores) s /= total;
  return argmax_with_priority(std::span<const double>(scores), categories_);
}

double ZbsStream::max_change(std::size_t level) const {
  double change = 0.0;
  for (std::size_t w = 0; w < worker_ids_.size(); ++w)
    change = std::max(change, std::abs(skills_[level + 1][w] - skills_[level][w]));
  return change;
}

bool ZbsStream::stops_after(std::size_t level) const {
  return max_change(level) < cfg_.tol || static_cast<int>(level) + 1 >= cfg_.max_iters;
}

void ZbsStream::rebuild() {
  skills_.resize(1);
  std::fill(skills_[0].begin(), skills_[0].end(), 1.0);
  consensus_.clear();
  agree_.clear();
  if (item_ids_.empty()) return;
  for (std::size_t t = 0;; ++t) {
    auto& c = consensus_.emplace_back(item_ids_.size());
    auto& a = agree_.emplace_back(worker_ids_.size(), 0);
    for (std::size_t i = 0; i < item_ids_.size(); ++i) {
      c[i] = vote(i, skills_[t]);
      for (const auto& v : item_votes_[i]) a[v.worker] += v.label == c[i];
    }
    auto& next = skills_.emplace_back(worker_ids_.size());
    for (std::size_t w = 0; w < worker_ids_.size(); ++w)
      next[w] = static_cast<double>(a[w]) / static_cast<double>(worker_items_[w].size());
    if (stops_after(t)) break;
  }
}

void ZbsStream::add(const LabelRecord& record) {
  const LabelIndex label = categories_.index_of(record.label);
  if (const auto it = item_index_.find(record.item_id); it != item_index_.end()) {
    const auto w = worker_index_.find(record.worker_id);
    if (w != worker_index_.end())
      for (const auto& v : item_votes_[it->second])
        if (v.worker == w->second)
          throw Error(ErrorCode::DuplicateCell,
                      "item '" + record.item_id + "', worker '" + record.worker_id + "' labeled twice");
  }
  const bool was_empty = item_ids_.empty();
  const bool new_worker = !worker_index_.count(record.worker_id);
  const std::size_t item = intern_item(record.item_id);
  const std::size_t worker = intern_worker(record.worker_id);
  auto& votes = item_votes_[item];
  const auto pos = std::find_if(votes.begin(), votes.end(),
                                [&](const Vote& v) { return worker_ids_[v.worker] > record.worker_id; });
  votes.insert(pos, {worker, label});
  worker_items_[worker].push_back(item);
  if (was_empty) {
    rebuild();
    return;
  }

  // Replay the stored trajectory level by level. `changed` holds workers
  // whose skill at the current level differs from the stored run.
  std::vector<std::size_t> changed;
  for (std::size_t t = 0;; ++t) {
    const bool extending = t == consensus_.size();
    if (extending) {
      // The stored run stopped at t; the new one continues. Start from copies
      // so the deltas below are relative to the previous level.
      consensus_.push_back(consensus_.back());
      agree_.push_back(agree_.back());
      skills_.push_back(skills_.back());
      changed.clear();
      for (std::size_t w = 0; w < worker_ids_.size(); ++w)
        if (skills_[t][w] != skills_[t - 1][w]) changed.push_back(w);
    }
    std::vector<std::size_t> dirty{item};
    for (std::size_t w : changed) dirty.insert(dirty.end(), worker_items_[w].begin(), worker_items_[w].end());
    std::sort(dirty.begin(), dirty.end());
    dirty.erase(std::unique(dirty.begin(), dirty.end()), dirty.end());

    auto& c = consensus_[t];
    auto& a = agree_[t];
    std::vector<std::size_t> touched{worker};
    for (std::size_t i : dirty) {
      ++rescored_;
      const LabelIndex prev = c[i];
      const LabelIndex next = vote(i, skills_[t]);
      // The new record's vote only enters the counts once, at its own item
      // (on extension levels the copied counts already include it).
      const bool fresh = i == item && !extending;
      if (next == prev && !fresh) continue;
      for (const auto& v : item_votes_[i]) {
        const bool counted = !(fresh && v.worker == worker);
        if (counted && v.label == prev) --a[v.worker];
        if (v.label == next) ++a[v.worker];
        touched.push_back(v.worker);
      }
      c[i] = next;
    }
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());

    changed.clear();
    auto& s = skills_[t + 1];
    for (std::size_t w : touched) {
      const double rate = static_cast<double>(a[w]) / static_cast<double>(worker_items_[w].size());
      if (rate != s[w] || (w == worker && new_worker)) changed.push_back(w);
      s[w] = rate;
    }
    if (stops_after(t)) {
      consensus_.resize(t + 1);
      agree_.resize(t + 1);
      skills_.resize(t + 2);
      return;
    }
  }
}

AggregationResult ZbsStream::result() const {
  std::vector<LabelRecord> records;
  for (std::size_t i = 0; i < item_ids_.size(); ++i)
    for (const auto& v : item_votes_[i])
      records.push_back({item_ids_[i], worker_ids_[v.worker], 0, categories_.name(v.label),
                         Source::Human, std::nullopt});
  const auto matrix = build_label_matrix(records, categories_);

  std::vector<double> skills(matrix.num_workers());
  for (std::size_t w = 0; w < matrix.num_workers(); ++w)
    skills[w] = skills_.back()[worker_index_.at(matrix.workers()[w])];

  auto result = detail::make_result(Algorithm::Zbs, matrix);
  result.posteriors = detail::weighted_vote(matrix, skills);
  result.labels = detail::decide(result.posteriors, matrix.categories());
  result.skill_kind = "accuracy";
  for (double s : skills) result.worker_skill.push_back({s});
  const std::size_t levels = consensus_.size();
  for (std::size_t t = 0; t < levels; ++t) result.trace.push_back(max_change(t));
  result.iterations = static_cast<int>(levels);
  result.converged = levels > 0 && max_change(levels - 1) < cfg_.tol;
  result.metadata["mode"] = "incremental";
  result.seed = cfg_.seed;
  return result;
}

}  // namespace truthkit
