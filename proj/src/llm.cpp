#include "truthkit/llm.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <mutex>
#include <regex>
#include <thread>

#include "truthkit/error.hpp"
#include "truthkit/io.hpp"

namespace truthkit {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  const char* junk = " \t\r\n'\"`*.";
  const auto first = s.find_first_not_of(junk);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(junk);
  return s.substr(first, last - first + 1);
}

// Spellings of the combined category used throughout the CODA-19 instruction.
const std::map<std::string, std::string>& synonyms() {
  static const std::map<std::string, std::string> table = {
      {"finding/contribution", "finding"},   {"finding / contribution", "finding"},
      {"findings/contributions", "finding"}, {"finding/contributions", "finding"},
      {"findings/contribution", "finding"},  {"contribution", "finding"},
      {"contributions", "finding"},          {"findings", "finding"},
  };
  return table;
}

std::optional<LabelIndex> match_label(std::string_view raw, const CategorySet& categories) {
  std::string text = lower(trim(raw));
  if (text.empty()) return std::nullopt;
  auto lookup = [&](const std::string& candidate) -> std::optional<LabelIndex> {
    for (LabelIndex k = 0; k < categories.size(); ++k)
      if (lower(categories.name(k)) == candidate) return k;
    return std::nullopt;
  };
  if (auto hit = lookup(text)) return hit;
  if (auto it = synonyms().find(text); it != synonyms().end())
    if (auto hit = lookup(it->second)) return hit;
  if (text.size() > 1 && text.back() == 's')
    if (auto hit = lookup(text.substr(0, text.size() - 1))) return hit;
  return std::nullopt;
}

}  // namespace

void LlmConfig::validate() const {
  if (runs < 1) throw Error(ErrorCode::InvalidArgument, "runs must be >= 1");
  if (!(temperature >= 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be >= 0");
  if (max_concurrent_requests < 1) throw Error(ErrorCode::InvalidArgument, "max_concurrent_requests must be >= 1");
  if (retry_limit < 0) throw Error(ErrorCode::InvalidArgument, "retry_limit must be >= 0");
}

std::string build_prompt(std::span<const std::string> segments, std::string_view instruction) {
  if (instruction.empty()) throw Error(ErrorCode::MissingInstruction, "prompt instruction is empty");
  if (segments.empty()) throw Error(ErrorCode::InvalidArgument, "prompt needs at least one segment");
  std::string prompt(instruction);
  prompt += "\n\n";
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const std::string n = std::to_string(i + 1);
    prompt += "fragment-" + n + " Text: '''" + segments[i] + "'''\n";
    prompt += "Label: []\n";
    if (i + 1 < segments.size()) prompt += "\n";
  }
  return prompt;
}

SlotLabels parse_response(std::string_view raw, std::size_t n_segments, const CategorySet& categories) {
  // "fragment-3 [Method]" on one line, or the echoed layout
  // "fragment-3 Text: ...\nLabel: [Method]".
  static const std::regex inline_form(R"(fragment\s*-\s*(\d+)[^\[\n]*\[([^\]\n]*)\])", std::regex::icase);
  static const std::regex echoed_form(R"(fragment\s*-\s*(\d+)[^\n]*\n\s*label\s*:\s*\[([^\]\n]*)\])",
                                      std::regex::icase);
  struct Hit {
    std::size_t position;
    std::size_t slot;
    std::string text;
  };
  std::vector<Hit> hits;
  const std::string text(raw);
  for (const auto* pattern : {&inline_form, &echoed_form}) {
    for (auto it = std::sregex_iterator(text.begin(), text.end(), *pattern); it != std::sregex_iterator(); ++it) {
      const auto& m = *it;
      std::size_t slot = 0;
      try {
        slot = std::stoul(m[1].str());
      } catch (const std::exception&) {
        continue;
      }
      hits.push_back({static_cast<std::size_t>(m.position(0)), slot, m[2].str()});
    }
  }
  std::stable_sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) { return a.position < b.position; });

  SlotLabels labels(n_segments);
  std::vector<bool> seen(n_segments, false);
  for (const auto& hit : hits) {
    if (hit.slot < 1 || hit.slot > n_segments) continue;
    const std::size_t index = hit.slot - 1;
    auto label = match_label(hit.text, categories);
    // An empty "[]" is the unanswered template, not an answer.
    if (seen[index] || (!label && trim(hit.text).empty())) continue;
    seen[index] = true;
    labels[index] = label;
  }
  return labels;
}

SlotLabels consolidate_runs(std::span<const SlotLabels> runs, const CategorySet& categories) {
  if (runs.empty()) throw Error(ErrorCode::InvalidArgument, "consolidation needs at least one run");
  const std::size_t slots = runs.front().size();
  SlotLabels out(slots);
  std::vector<long long> counts(categories.size());
  for (std::size_t s = 0; s < slots; ++s) {
    std::fill(counts.begin(), counts.end(), 0);
    bool any = false;
    for (const auto& run : runs) {
      if (run.size() != slots) throw Error(ErrorCode::InvalidArgument, "runs disagree on segment count");
      if (run[s]) {
        ++counts.at(*run[s]);
        any = true;
      }
    }
    if (any) out[s] = argmax_with_priority(std::span<const long long>(counts), categories);
  }
  return out;
}

std::vector<LabelRecord> llm_label_records(const std::map<std::string, std::optional<LabelIndex>>& llm_labels,
                                           const std::string& worker_id, const CategorySet& categories) {
  std::vector<LabelRecord> out;
  for (const auto& [item, label] : llm_labels) {
    if (!label) continue;
    out.push_back({item, worker_id, 0, categories.name(*label), Source::Llm, std::nullopt});
  }
  return out;
}

LabelMatrix inject_as_worker(const LabelMatrix& matrix,
                             const std::map<std::string, std::optional<LabelIndex>>& llm_labels,
                             const std::string& worker_id) {
  if (matrix.find_worker(worker_id))
    throw Error(ErrorCode::WorkerExists, "worker '" + worker_id + "' is already in the matrix");
  auto records = matrix.to_records();
  auto extra = llm_label_records(llm_labels, worker_id, matrix.categories());
  records.insert(records.end(), extra.begin(), extra.end());
  return build_label_matrix(records, matrix.categories());
}

CostSummary llm_cost(long long input_tokens, long long output_tokens, Money input_rate_per_1k,
                     Money output_rate_per_1k) {
  CostSummary c;
  c.input_tokens = input_tokens;
  c.output_tokens = output_tokens;
  c.input_cost = cost_for_tokens(input_tokens, input_rate_per_1k);
  c.output_cost = cost_for_tokens(output_tokens, output_rate_per_1k);
  c.total = c.input_cost + c.output_cost;
  return c;
}

// ---------------------------------------------------------------------------
// Fixtures

std::string run_record_line(const LlmRunRecord& r, const CategorySet& categories) {
  io::json labels = io::json::array();
  for (const auto& l : r.labels) labels.push_back(l ? io::json(categories.name(*l)) : io::json(nullptr));
  io::json j = {{"abstract_id", r.abstract_id},   {"run_index", r.run_index},
                {"model", r.model},               {"temperature", r.temperature},
                {"response", r.response},         {"item_ids", r.item_ids},
                {"labels", labels},               {"input_tokens", r.input_tokens},
                {"output_tokens", r.output_tokens}};
  return j.dump() + "\n";
}

std::vector<LlmRunRecord> read_run_records(const std::filesystem::path& path, const CategorySet& categories) {
  std::vector<LlmRunRecord> out;
  io::for_each_jsonl(path, [&](const io::json& o, std::size_t) {
    try {
      LlmRunRecord r;
      r.abstract_id = o.at("abstract_id").get<std::string>();
      r.run_index = o.at("run_index").get<int>();
      r.model = o.value("model", std::string());
      r.temperature = o.value("temperature", 0.0);
      r.response = o.at("response").get<std::string>();
      r.item_ids = o.value("item_ids", std::vector<std::string>{});
      if (auto it = o.find("labels"); it != o.end()) {
        for (const auto& l : *it) {
          if (l.is_null()) r.labels.emplace_back();
          else r.labels.emplace_back(categories.index_of(l.get<std::string>()));
        }
      } else {
        r.labels = parse_response(r.response, r.item_ids.size(), categories);
      }
      r.input_tokens = o.value("input_tokens", 0LL);
      r.output_tokens = o.value("output_tokens", 0LL);
      out.push_back(std::move(r));
    } catch (const io::json::exception& e) {
      throw Error(ErrorCode::SchemaError, std::string("run record: ") + e.what());
    }
  });
  return out;
}

std::vector<Abstract> read_abstracts(const std::filesystem::path& path) {
  std::vector<Abstract> out;
  io::for_each_jsonl(path, [&](const io::json& o, std::size_t) {
    try {
      Abstract a;
      a.abstract_id = o.at("abstract_id").get<std::string>();
      for (const auto& s : o.at("segments"))
        a.segments.push_back({s.at("item_id").get<std::string>(), s.at("text").get<std::string>()});
      if (a.segments.empty()) throw Error(ErrorCode::SchemaError, "abstract has no segments");
      out.push_back(std::move(a));
    } catch (const io::json::exception& e) {
      throw Error(ErrorCode::SchemaError, std::string("abstract: ") + e.what());
    }
  });
  return out;
}

ReplayProvider::ReplayProvider(const std::filesystem::path& fixture) {
  io::for_each_jsonl(fixture, [&](const io::json& o, std::size_t) {
    try {
      Completion c{o.at("response").get<std::string>(), o.value("input_tokens", 0LL), o.value("output_tokens", 0LL)};
      responses_[{o.at("abstract_id").get<std::string>(), o.at("run_index").get<int>()}] = std::move(c);
    } catch (const io::json::exception& e) {
      throw Error(ErrorCode::SchemaError, std::string("replay fixture: ") + e.what());
    }
  });
}

ReplayProvider::ReplayProvider(std::span<const LlmRunRecord> records) {
  for (const auto& r : records)
    responses_[{r.abstract_id, r.run_index}] = Completion{r.response, r.input_tokens, r.output_tokens};
}

Completion ReplayProvider::complete(const CompletionRequest& request) {
  auto it = responses_.find({request.abstract_id, request.run_index});
  if (it == responses_.end()) {
    throw Error(ErrorCode::ProviderError, "replay fixture has no response for abstract '" + request.abstract_id +
                                              "' run " + std::to_string(request.run_index));
  }
  return it->second;
}

// ---------------------------------------------------------------------------
// Corpus annotation

AnnotationOutcome annotate_corpus(LlmProvider& provider, std::span<const Abstract> abstracts, const LlmConfig& cfg,
                                  const CategorySet& categories, const AnnotationOptions& options) {
  cfg.validate();
  const std::string& instruction = options.instruction.empty() ? default_instruction() : options.instruction;

  struct Job {
    std::size_t abstract;
    int run;
  };
  std::map<std::pair<std::string, int>, LlmRunRecord> done;
  if (options.checkpoint && std::filesystem::exists(*options.checkpoint)) {
    for (auto& r : read_run_records(*options.checkpoint, categories)) done[{r.abstract_id, r.run_index}] = std::move(r);
  }
  std::vector<Job> jobs;
  for (std::size_t a = 0; a < abstracts.size(); ++a)
    for (int run = 0; run < cfg.runs; ++run)
      if (!done.count({abstracts[a].abstract_id, run})) jobs.push_back({a, run});

  std::mutex writer;
  std::FILE* checkpoint = nullptr;
  if (options.checkpoint && !jobs.empty()) {
    checkpoint = std::fopen(options.checkpoint->c_str(), "ab");
    if (!checkpoint) throw Error(ErrorCode::IoError, "cannot append to " + options.checkpoint->string());
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string failure;
  auto work = [&] {
    for (;;) {
      if (failed) return;
      const std::size_t j = next++;
      if (j >= jobs.size()) return;
      const auto& abstract = abstracts[jobs[j].abstract];
      std::vector<std::string> texts;
      for (const auto& s : abstract.segments) texts.push_back(s.text);
      CompletionRequest request{cfg.model_name, build_prompt(texts, instruction), cfg.temperature,
                                abstract.abstract_id, jobs[j].run};
      std::optional<Completion> completion;
      for (int attempt = 0; !completion; ++attempt) {
        try {
          completion = provider.complete(request);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::ProviderError || attempt >= cfg.retry_limit) {
            std::lock_guard lock(writer);
            if (!failed.exchange(true)) failure = e.what();
            return;
          }
          std::this_thread::sleep_for(cfg.backoff_base * (1LL << std::min(attempt, 20)));
        }
      }
      LlmRunRecord record;
      record.abstract_id = abstract.abstract_id;
      record.run_index = jobs[j].run;
      record.model = cfg.model_name;
      record.temperature = cfg.temperature;
      record.response = completion->text;
      for (const auto& s : abstract.segments) record.item_ids.push_back(s.item_id);
      record.labels = parse_response(record.response, abstract.segments.size(), categories);
      record.input_tokens = completion->input_tokens;
      record.output_tokens = completion->output_tokens;

      std::lock_guard lock(writer);
      if (checkpoint) {
        const auto line = run_record_line(record, categories);
        std::fwrite(line.data(), 1, line.size(), checkpoint);
        std::fflush(checkpoint);
      }
      done[{record.abstract_id, record.run_index}] = std::move(record);
    }
  };
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.max_concurrent_requests), jobs.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(work);
  if (threads > 0) work();
  for (auto& t : pool) t.join();
  if (checkpoint) std::fclose(checkpoint);
  if (failed) throw Error(ErrorCode::ProviderError, failure + " (completed runs kept in checkpoint)");

  AnnotationOutcome outcome;
  long long in_tokens = 0, out_tokens = 0;
  for (const auto& abstract : abstracts) {
    std::vector<SlotLabels> runs;
    for (int run = 0; run < cfg.runs; ++run) {
      auto& record = done.at({abstract.abstract_id, run});
      if (record.labels.size() != abstract.segments.size())
        record.labels = parse_response(record.response, abstract.segments.size(), categories);
      in_tokens += record.input_tokens;
      out_tokens += record.output_tokens;
      runs.push_back(record.labels);
      outcome.records.push_back(record);
    }
    const auto merged = consolidate_runs(runs, categories);
    for (std::size_t s = 0; s < abstract.segments.size(); ++s)
      outcome.consolidated[abstract.segments[s].item_id] = merged[s];
  }
  outcome.cost = llm_cost(in_tokens, out_tokens, cfg.input_rate_per_1k, cfg.output_rate_per_1k);
  return outcome;
}

}  // namespace truthkit
