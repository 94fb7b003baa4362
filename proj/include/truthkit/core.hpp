#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace truthkit {

using LabelIndex = std::size_t;

/// Ordered category names plus the priority used to break ties (first entry
/// wins). Every aggregator shares this one tie rule.
class CategorySet {
 public:
  CategorySet(std::vector<std::string> labels, std::vector<std::string> tie_priority);

  /// Background, Purpose, Method, Finding, Other; ties resolved
  /// Finding > Method > Purpose > Background > Other.
  static CategorySet coda19();

  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::vector<std::string>& tie_priority() const noexcept { return tie_priority_; }
  const std::string& name(LabelIndex index) const { return labels_.at(index); }

  std::optional<LabelIndex> find(std::string_view label) const;
  /// Throws UnknownLabel.
  LabelIndex index_of(std::string_view label) const;
  /// 0 for the label that wins every tie.
  std::size_t priority_rank(LabelIndex index) const { return rank_.at(index); }

  bool operator==(const CategorySet& other) const {
    return labels_ == other.labels_ && tie_priority_ == other.tie_priority_;
  }

 private:
  std::vector<std::string> labels_;
  std::vector<std::string> tie_priority_;
  std::vector<std::size_t> rank_;
};

/// Index of the maximal count; ties go to the label with the best priority rank.
LabelIndex argmax_with_priority(std::span<const long long> counts, const CategorySet& categories);
/// Same for real scores. Scores within `rel_tol * max|score|` of the maximum
/// count as tied so that summation order cannot flip a tie.
LabelIndex argmax_with_priority(std::span<const double> scores, const CategorySet& categories,
                                double rel_tol = 1e-12);

enum class Source { Human, Llm };

std::string_view source_name(Source source) noexcept;
Source parse_source(std::string_view text);

struct LabelRecord {
  std::string item_id;
  std::string worker_id;
  std::int64_t batch_id = 0;
  std::string label;
  Source source = Source::Human;
  std::optional<std::string> interface_tag;

  bool operator==(const LabelRecord&) const = default;
};

struct Cell {
  std::size_t item = 0;
  std::size_t worker = 0;
  LabelIndex label = 0;

  bool operator==(const Cell&) const = default;
};

/// Sparse item x worker matrix of label indices. Items and workers are
/// sorted lexicographically; cells are sorted by (item, worker). Immutable.
class LabelMatrix {
 public:
  const CategorySet& categories() const noexcept { return categories_; }
  const std::vector<std::string>& items() const noexcept { return items_; }
  const std::vector<std::string>& workers() const noexcept { return workers_; }
  std::span<const Cell> cells() const noexcept { return cells_; }

  std::size_t num_items() const noexcept { return items_.size(); }
  std::size_t num_workers() const noexcept { return workers_.size(); }
  std::size_t num_categories() const noexcept { return categories_.size(); }

  /// Cells belonging to one item, ordered by worker.
  std::span<const Cell> item_cells(std::size_t item) const {
    return std::span<const Cell>(cells_).subspan(item_offsets_[item],
                                                 item_offsets_[item + 1] - item_offsets_[item]);
  }
  /// Positions into cells() of one worker's labels, ordered by item.
  const std::vector<std::size_t>& worker_cells(std::size_t worker) const {
    return worker_cells_.at(worker);
  }
  Source worker_source(std::size_t worker) const { return worker_sources_.at(worker); }

  std::optional<std::size_t> find_item(std::string_view id) const;
  std::optional<std::size_t> find_worker(std::string_view id) const;

  /// One record per cell (batch 0, no interface tag), in cell order.
  std::vector<LabelRecord> to_records() const;

  bool operator==(const LabelMatrix& other) const {
    return categories_ == other.categories_ && items_ == other.items_ &&
           workers_ == other.workers_ && cells_ == other.cells_ &&
           worker_sources_ == other.worker_sources_;
  }

 private:
  friend LabelMatrix build_label_matrix(std::span<const LabelRecord>, const CategorySet&);

  explicit LabelMatrix(CategorySet categories) : categories_(std::move(categories)) {}

  CategorySet categories_;
  std::vector<std::string> items_;
  std::vector<std::string> workers_;
  std::vector<Source> worker_sources_;
  std::vector<Cell> cells_;
  std::vector<std::size_t> item_offsets_;
  std::vector<std::vector<std::size_t>> worker_cells_;
};

/// Throws EmptyDataset, DuplicateCell, UnknownLabel, InvalidArgument (a
/// worker mixing human and llm sources).
LabelMatrix build_label_matrix(std::span<const LabelRecord> records, const CategorySet& categories);

/// Records whose interface tag equals `tag`, in input order; no tag keeps all.
std::vector<LabelRecord> filter_by_interface(std::span<const LabelRecord> records,
                                             std::optional<std::string_view> tag);

/// worker id -> batch in which the worker's qualification was revoked.
struct RemovalLedger {
  std::map<std::string, std::int64_t> entries;

  void add(const std::string& worker_id, std::int64_t batch_id);
  std::optional<std::int64_t> removed_in(const std::string& worker_id) const;
  bool empty() const noexcept { return entries.empty(); }
};

/// item id -> label index. Used for gold labels (possibly partial) and for
/// predictions handed to the evaluation module.
using LabelAssignment = std::map<std::string, LabelIndex>;
using GoldLabels = LabelAssignment;

/// item id -> article id.
using ArticleMap = std::map<std::string, std::string>;

}  // namespace truthkit
