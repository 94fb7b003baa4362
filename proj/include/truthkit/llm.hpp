#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "truthkit/core.hpp"
#include "truthkit/money.hpp"

namespace truthkit {

/// One slot per segment; std::nullopt marks a ParseFailure.
using SlotLabels = std::vector<std::optional<LabelIndex>>;

struct LlmConfig {
  double temperature = 0.2;
  int runs = 5;
  std::string model_name = "gpt-4";
  int max_concurrent_requests = 4;
  int retry_limit = 3;
  std::chrono::milliseconds backoff_base{500};
  Money input_rate_per_1k = Money::from_micros(30'000);   // $0.03
  Money output_rate_per_1k = Money::from_micros(60'000);  // $0.06

  void validate() const;  // InvalidArgument
};

struct Segment {
  std::string item_id;
  std::string text;
};

struct Abstract {
  std::string abstract_id;
  std::vector<Segment> segments;
};

struct LlmRunRecord {
  std::string abstract_id;
  int run_index = 0;
  std::string model;
  double temperature = 0.0;
  std::string response;
  std::vector<std::string> item_ids;
  SlotLabels labels;
  long long input_tokens = 0;
  long long output_tokens = 0;
};

/// The CODA-19 worker instruction used as the zero-shot prompt preamble.
const std::string& default_instruction();

/// Instruction, then one block per segment:
///   fragment-i Text: '''<segment>'''
///   Label: []
/// Throws MissingInstruction for an empty instruction and InvalidArgument for
/// an empty segment list.
std::string build_prompt(std::span<const std::string> segments, std::string_view instruction);

/// Extracts "fragment-i [Label]" pairs (case-insensitive, first occurrence of
/// each index wins). "Finding/Contribution" style synonyms map to Finding.
SlotLabels parse_response(std::string_view raw, std::size_t n_segments, const CategorySet& categories);

/// Per-slot majority over runs ignoring failures; ties by category priority;
/// a slot that failed in every run stays a failure.
SlotLabels consolidate_runs(std::span<const SlotLabels> runs, const CategorySet& categories);

/// Adds `worker_id` with one llm-sourced cell per parsed label. Failure slots
/// are left empty. Items not yet in the matrix are added. Throws WorkerExists.
LabelMatrix inject_as_worker(const LabelMatrix& matrix,
                             const std::map<std::string, std::optional<LabelIndex>>& llm_labels,
                             const std::string& worker_id);

/// Label records (source llm) for the parsed slots.
std::vector<LabelRecord> llm_label_records(const std::map<std::string, std::optional<LabelIndex>>& llm_labels,
                                           const std::string& worker_id, const CategorySet& categories);

struct CompletionRequest {
  std::string model;
  std::string prompt;
  double temperature = 0.0;
  std::string abstract_id;
  int run_index = 0;
};

struct Completion {
  std::string text;
  long long input_tokens = 0;
  long long output_tokens = 0;
};

/// Implementations must be callable from several threads at once. Transient
/// failures are reported as Error(ProviderError).
class LlmProvider {
 public:
  virtual ~LlmProvider() = default;
  virtual Completion complete(const CompletionRequest& request) = 0;
};

/// Serves completions recorded in an LlmRunRecord JSONL fixture, keyed by
/// (abstract_id, run_index).
class ReplayProvider final : public LlmProvider {
 public:
  explicit ReplayProvider(const std::filesystem::path& fixture);
  explicit ReplayProvider(std::span<const LlmRunRecord> records);
  Completion complete(const CompletionRequest& request) override;

 private:
  std::map<std::pair<std::string, int>, Completion> responses_;
};

/// OpenAI-compatible chat-completions endpoint.
class HttpChatProvider final : public LlmProvider {
 public:
  /// base_url like "https://api.openai.com" or "http://127.0.0.1:8080".
  HttpChatProvider(std::string base_url, std::string api_key,
                   std::chrono::seconds timeout = std::chrono::seconds(120));
  /// Key from TRUTHKIT_API_KEY (or OPENAI_API_KEY), base URL from
  /// TRUTHKIT_API_BASE. Throws ProviderError if no key is set.
  static std::unique_ptr<HttpChatProvider> from_environment();
  Completion complete(const CompletionRequest& request) override;

 private:
  std::string base_url_;
  std::string api_key_;
  std::chrono::seconds timeout_;
};

struct CostSummary {
  long long input_tokens = 0;
  long long output_tokens = 0;
  Money input_cost;
  Money output_cost;
  Money total;
};

CostSummary llm_cost(long long input_tokens, long long output_tokens, Money input_rate_per_1k,
                     Money output_rate_per_1k);

struct AnnotationOutcome {
  std::vector<LlmRunRecord> records;  // abstract order, then run index
  std::map<std::string, std::optional<LabelIndex>> consolidated;  // item id -> label
  CostSummary cost;
};

struct AnnotationOptions {
  std::string instruction;  // empty selects default_instruction()
  /// Completed run records are appended here as they finish; records already
  /// present are reused instead of re-requested (resume).
  std::optional<std::filesystem::path> checkpoint;
};

/// runs x abstracts requests with at most cfg.max_concurrent_requests in
/// flight and exponential-backoff retries. Throws ProviderError once a request
/// exhausts its retries; everything finished before that is in the checkpoint.
AnnotationOutcome annotate_corpus(LlmProvider& provider, std::span<const Abstract> abstracts,
                                  const LlmConfig& cfg, const CategorySet& categories,
                                  const AnnotationOptions& options = {});

std::vector<Abstract> read_abstracts(const std::filesystem::path& path);
std::vector<LlmRunRecord> read_run_records(const std::filesystem::path& path, const CategorySet& categories);
std::string run_record_line(const LlmRunRecord& record, const CategorySet& categories);

}  // namespace truthkit
