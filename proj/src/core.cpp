#include "truthkit/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "truthkit/error.hpp"

namespace truthkit {

CategorySet::CategorySet(std::vector<std::string> labels, std::vector<std::string> tie_priority)
    : labels_(std::move(labels)), tie_priority_(std::move(tie_priority)) {
  if (labels_.empty()) throw Error(ErrorCode::InvalidCategories, "category set is empty");
  std::set<std::string> seen;
  for (const auto& label : labels_) {
    if (label.empty()) throw Error(ErrorCode::InvalidCategories, "empty category name");
    if (!seen.insert(label).second)
      throw Error(ErrorCode::InvalidCategories, "duplicate category '" + label + "'");
  }
  if (tie_priority_.size() != labels_.size())
    throw Error(ErrorCode::InvalidCategories, "tie priority must list every category exactly once");
  rank_.assign(labels_.size(), labels_.size());
  for (std::size_t r = 0; r < tie_priority_.size(); ++r) {
    auto it = std::find(labels_.begin(), labels_.end(), tie_priority_[r]);
    if (it == labels_.end())
      throw Error(ErrorCode::InvalidCategories,
                  "tie priority names unknown category '" + tie_priority_[r] + "'");
    auto index = static_cast<std::size_t>(it - labels_.begin());
    if (rank_[index] != labels_.size())
      throw Error(ErrorCode::InvalidCategories,
                  "tie priority repeats category '" + tie_priority_[r] + "'");
    rank_[index] = r;
  }
}

CategorySet CategorySet::coda19() {
  return CategorySet({"Background", "Purpose", "Method", "Finding", "Other"},
                     {"Finding", "Method", "Purpose", "Background", "Other"});
}

std::optional<LabelIndex> CategorySet::find(std::string_view label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] == label) return i;
  return std::nullopt;
}

LabelIndex CategorySet::index_of(std::string_view label) const {
  if (auto found = find(label)) return *found;
  throw Error(ErrorCode::UnknownLabel, "label '" + std::string(label) + "' is not a category");
}

LabelIndex argmax_with_priority(std::span<const long long> counts, const CategorySet& categories) {
  LabelIndex best = 0;
  for (LabelIndex k = 1; k < counts.size(); ++k) {
    if (counts[k] > counts[best] ||
        (counts[k] == counts[best] && categories.priority_rank(k) < categories.priority_rank(best)))
      best = k;
  }
  return best;
}

LabelIndex argmax_with_priority(std::span<const double> scores, const CategorySet& categories,
                                double rel_tol) {
  double top = scores[0];
  double scale = std::abs(scores[0]);
  for (double s : scores) {
    top = std::max(top, s);
    scale = std::max(scale, std::abs(s));
  }
  const double slack = rel_tol * scale;
  std::optional<LabelIndex> best;
  for (LabelIndex k = 0; k < scores.size(); ++k) {
    if (scores[k] < top - slack) continue;
    if (!best || categories.priority_rank(k) < categories.priority_rank(*best)) best = k;
  }
  return *best;
}

std::string_view source_name(Source source) noexcept {
  return source == Source::Llm ? "llm" : "human";
}

Source parse_source(std::string_view text) {
  if (text == "human") return Source::Human;
  if (text == "llm") return Source::Llm;
  throw Error(ErrorCode::SchemaError, "source must be \"human\" or \"llm\", got '" +
                                          std::string(text) + "'");
}

std::optional<std::size_t> LabelMatrix::find_item(std::string_view id) const {
  auto it = std::lower_bound(items_.begin(), items_.end(), id);
  if (it == items_.end() || *it != id) return std::nullopt;
  return static_cast<std::size_t>(it - items_.begin());
}

std::optional<std::size_t> LabelMatrix::find_worker(std::string_view id) const {
  auto it = std::lower_bound(workers_.begin(), workers_.end(), id);
  if (it == workers_.end() || *it != id) return std::nullopt;
  return static_cast<std::size_t>(it - workers_.begin());
}

std::vector<LabelRecord> LabelMatrix::to_records() const {
  std::vector<LabelRecord> out;
  out.reserve(cells_.size());
  for (const auto& cell : cells_) {
    LabelRecord r;
    r.item_id = items_[cell.item];
    r.worker_id = workers_[cell.worker];
    r.label = categories_.name(cell.label);
    r.source = worker_sources_[cell.worker];
    out.push_back(std::move(r));
  }
  return out;
}

LabelMatrix build_label_matrix(std::span<const LabelRecord> records, const CategorySet& categories) {
  if (records.empty()) throw Error(ErrorCode::EmptyDataset, "no label records");

  LabelMatrix m(categories);
  for (const auto& r : records) {
    m.items_.push_back(r.item_id);
    m.workers_.push_back(r.worker_id);
  }
  auto dedupe = [](std::vector<std::string>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  dedupe(m.items_);
  dedupe(m.workers_);

  std::vector<std::optional<Source>> sources(m.workers_.size());
  m.cells_.reserve(records.size());
  for (const auto& r : records) {
    Cell cell{*m.find_item(r.item_id), *m.find_worker(r.worker_id), categories.index_of(r.label)};
    auto& source = sources[cell.worker];
    if (source && *source != r.source)
      throw Error(ErrorCode::InvalidArgument,
                  "worker '" + r.worker_id + "' mixes human and llm records");
    source = r.source;
    m.cells_.push_back(cell);
  }
  std::sort(m.cells_.begin(), m.cells_.end(), [](const Cell& a, const Cell& b) {
    return std::tie(a.item, a.worker) < std::tie(b.item, b.worker);
  });
  for (std::size_t i = 1; i < m.cells_.size(); ++i) {
    const auto& prev = m.cells_[i - 1];
    const auto& cur = m.cells_[i];
    if (prev.item == cur.item && prev.worker == cur.worker)
      throw Error(ErrorCode::DuplicateCell, "item '" + m.items_[cur.item] + "', worker '" +
                                                m.workers_[cur.worker] + "' labeled twice");
  }

  for (const auto& s : sources) m.worker_sources_.push_back(*s);
  m.item_offsets_.assign(m.items_.size() + 1, 0);
  for (const auto& cell : m.cells_) ++m.item_offsets_[cell.item + 1];
  for (std::size_t i = 0; i < m.items_.size(); ++i) m.item_offsets_[i + 1] += m.item_offsets_[i];
  m.worker_cells_.assign(m.workers_.size(), {});
  for (std::size_t c = 0; c < m.cells_.size(); ++c) m.worker_cells_[m.cells_[c].worker].push_back(c);
  return m;
}

std::vector<LabelRecord> filter_by_interface(std::span<const LabelRecord> records,
                                             std::optional<std::string_view> tag) {
  std::vector<LabelRecord> out;
  for (const auto& r : records) {
    if (!tag || (r.interface_tag && *r.interface_tag == *tag)) out.push_back(r);
  }
  return out;
}

void RemovalLedger::add(const std::string& worker_id, std::int64_t batch_id) {
  if (batch_id < 0)
    throw Error(ErrorCode::InvalidArgument, "negative removal batch for worker '" + worker_id + "'");
  if (!entries.emplace(worker_id, batch_id).second)
    throw Error(ErrorCode::InvalidArgument, "worker '" + worker_id + "' listed twice in ledger");
}

std::optional<std::int64_t> RemovalLedger::removed_in(const std::string& worker_id) const {
  auto it = entries.find(worker_id);
  if (it == entries.end()) return std::nullopt;
  return it->second;
}

}  // namespace truthkit
