#include <algorithm>

#include "common.hpp"

namespace truthkit {

std::string_view algorithm_name(Algorithm algorithm) noexcept {
  switch (algorithm) {
    case Algorithm::MajorityVote: return "mv";
    case Algorithm::DawidSkene: return "ds";
    case Algorithm::OneCoin: return "onecoin";
    case Algorithm::Glad: return "glad";
    case Algorithm::Mace: return "mace";
    case Algorithm::Mmsr: return "mmsr";
    case Algorithm::Wawa: return "wawa";
    case Algorithm::Zbs: return "zbs";
  }
  return "mv";
}

const std::vector<Algorithm>& all_algorithms() {
  static const std::vector<Algorithm> all = {Algorithm::MajorityVote, Algorithm::DawidSkene,
                                             Algorithm::OneCoin,      Algorithm::Glad,
                                             Algorithm::Mace,         Algorithm::Mmsr,
                                             Algorithm::Wawa,         Algorithm::Zbs};
  return all;
}

Algorithm parse_algorithm(std::string_view text) {
  for (Algorithm a : all_algorithms())
    if (algorithm_name(a) == text) return a;
  throw Error(ErrorCode::InvalidArgument,
              "unknown algorithm '" + std::string(text) +
                  "' (expected mv, ds, onecoin, glad, mace, mmsr, wawa or zbs)");
}

void EmConfig::validate() const {
  if (max_iters < 1) throw Error(ErrorCode::InvalidArgument, "max_iters must be >= 1");
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be > 0");
  if (!(smoothing >= 0.0)) throw Error(ErrorCode::InvalidArgument, "smoothing must be >= 0");
}

LabelAssignment AggregationResult::assignment() const {
  LabelAssignment out;
  for (std::size_t i = 0; i < items.size(); ++i) out.emplace(items[i], labels[i]);
  return out;
}

std::optional<std::size_t> AggregationResult::find_worker(std::string_view worker_id) const {
  auto it = std::lower_bound(workers.begin(), workers.end(), worker_id);
  if (it == workers.end() || *it != worker_id) return std::nullopt;
  return static_cast<std::size_t>(it - workers.begin());
}

AggregationResult aggregate(Algorithm algorithm, const LabelMatrix& matrix,
                            const AggregationOptions& options) {
  switch (algorithm) {
    case Algorithm::MajorityVote: return aggregate_majority_vote(matrix);
    case Algorithm::DawidSkene: return aggregate_dawid_skene(matrix, options.em);
    case Algorithm::OneCoin: return aggregate_one_coin(matrix, options.em);
    case Algorithm::Glad: return aggregate_glad(matrix, options.em, options.glad);
    case Algorithm::Mace: return aggregate_mace(matrix, options.em, options.mace_restarts);
    case Algorithm::Mmsr: return aggregate_mmsr(matrix, options.em);
    case Algorithm::Wawa: return aggregate_wawa(matrix);
    case Algorithm::Zbs: return aggregate_zbs(matrix, options.em);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown algorithm");
}

}  // namespace truthkit
