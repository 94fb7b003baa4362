#include "truthkit/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "truthkit/error.hpp"
#include "truthkit/evaluation.hpp"
#include "truthkit/io.hpp"
#include "truthkit/report.hpp"
#include "truthkit/rng.hpp"

namespace truthkit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void schema(const std::string& what) { throw Error(ErrorCode::SchemaError, "manifest: " + what); }

void reject_unknown(const json& object, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!object.is_object()) schema(std::string(where) + " must be an object");
  for (const auto& [key, value] : object.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      schema(std::string(where) + ": unknown key \"" + key + "\"");
  }
}

fs::path resolve(const json& value, const fs::path& base, std::string_view key) {
  if (!value.is_string()) schema(std::string(key) + " must be a path string");
  fs::path p = value.get<std::string>();
  if (p.is_relative()) p = base / p;
  if (!fs::exists(p)) throw Error(ErrorCode::IoError, std::string(key) + " file not found: " + p.string());
  return p;
}

std::optional<fs::path> optional_path(const json& object, const char* key, const fs::path& base) {
  auto it = object.find(key);
  if (it == object.end() || it->is_null()) return std::nullopt;
  return resolve(*it, base, key);
}

template <class T, class Parse>
std::vector<T> name_list(const json& object, const char* key, std::vector<T> fallback, Parse parse) {
  auto it = object.find(key);
  if (it == object.end()) return fallback;
  if (!it->is_array() || it->empty()) schema(std::string(key) + " must be a non-empty array of names");
  std::vector<T> out;
  for (const auto& v : *it) {
    if (!v.is_string()) schema(std::string(key) + " entries must be strings");
    T parsed = parse(v.template get<std::string>());
    if (std::find(out.begin(), out.end(), parsed) != out.end()) schema(std::string(key) + " lists a name twice");
    out.push_back(parsed);
  }
  return out;
}

std::string cell_name(Algorithm algorithm, CleaningStrategy strategy) {
  return std::string(algorithm_name(algorithm)) + "__" + std::string(strategy_name(strategy));
}

/// Gold restricted to the items a prediction covers, so items emptied by
/// cleaning do not abort evaluation.
GoldLabels covered_gold(const GoldLabels& gold, const LabelAssignment& pred) {
  GoldLabels out;
  for (const auto& [item, label] : gold)
    if (pred.count(item)) out.emplace(item, label);
  return out;
}

LabelAssignment parsed_only(const std::map<std::string, std::optional<LabelIndex>>& labels) {
  LabelAssignment out;
  for (const auto& [item, label] : labels)
    if (label) out.emplace(item, *label);
  return out;
}

class OutputDir {
 public:
  OutputDir(fs::path root, std::string hash) : root_(std::move(root)), hash_(std::move(hash)) {}

  void write_json(const fs::path& relative, json document) {
    document["manifest_hash"] = hash_;
    write_text(relative, io::dump(document));
  }

  void write_text(const fs::path& relative, const std::string& contents) {
    const fs::path full = root_ / relative;
    fs::create_directories(full.parent_path());
    io::write_exclusive(full, contents);
    std::lock_guard lock(mutex_);
    written_.push_back(relative);
  }

  std::vector<fs::path> written() const {
    auto out = written_;
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  fs::path root_;
  std::string hash_;
  std::mutex mutex_;
  std::vector<fs::path> written_;
};

json metrics_with_coverage(const LabelAssignment& pred, const GoldLabels& gold, const CategorySet& cats) {
  const GoldLabels covered = covered_gold(gold, pred);
  if (covered.empty()) throw Error(ErrorCode::MissingPrediction, "no gold item is covered by the prediction");
  json out = report::metrics_to_json(metrics(pred, covered, cats), cats);
  out["gold_items_uncovered"] = gold.size() - covered.size();
  return out;
}

}  // namespace

RunManifest manifest_from_json(const json& document, const fs::path& base_dir) {
  reject_unknown(document,
                 {"inputs", "interface", "strategies", "algorithms", "seed", "options", "llm", "simulation", "threads"},
                 "manifest");
  RunManifest m;
  m.source = document;
  auto inputs = document.find("inputs");
  if (inputs == document.end()) schema("missing \"inputs\"");
  reject_unknown(*inputs, {"records", "categories", "ledger", "gold", "articles"}, "inputs");
  if (!inputs->contains("records")) schema("inputs.records is required");
  m.records = resolve(inputs->at("records"), base_dir, "records");
  m.categories = optional_path(*inputs, "categories", base_dir);
  m.ledger = optional_path(*inputs, "ledger", base_dir);
  m.gold = optional_path(*inputs, "gold", base_dir);
  m.articles = optional_path(*inputs, "articles", base_dir);

  if (auto it = document.find("interface"); it != document.end() && !it->is_null()) {
    if (!it->is_string()) schema("interface must be a string");
    m.interface_tag = it->get<std::string>();
  }
  m.strategies = name_list<CleaningStrategy>(document, "strategies", m.strategies, parse_strategy);
  m.algorithms = name_list<Algorithm>(document, "algorithms", m.algorithms, parse_algorithm);
  if (auto it = document.find("seed"); it != document.end()) {
    if (!it->is_number_integer() || (!it->is_number_unsigned() && it->get<std::int64_t>() < 0))
      schema("seed must be a non-negative integer");
    m.seed = it->get<std::uint64_t>();
  }
  if (auto it = document.find("options"); it != document.end()) {
    if (it->contains("em") && it->at("em").contains("seed")) schema("options.em.seed is derived from seed");
    m.options = report::options_from_json(*it);
  }
  if (auto it = document.find("threads"); it != document.end()) {
    if (!it->is_number_integer() || it->get<int>() < 0) schema("threads must be a non-negative integer");
    m.threads = it->get<int>();
  }
  if (auto it = document.find("llm"); it != document.end()) {
    reject_unknown(*it, {"abstracts", "replay", "instruction", "config", "worker_id", "inject"}, "llm");
    LlmStage stage;
    if (!it->contains("abstracts")) schema("llm.abstracts is required");
    stage.abstracts = resolve(it->at("abstracts"), base_dir, "abstracts");
    stage.replay = optional_path(*it, "replay", base_dir);
    stage.instruction = optional_path(*it, "instruction", base_dir);
    if (auto c = it->find("config"); c != it->end()) stage.config = report::llm_config_from_json(*c);
    if (auto w = it->find("worker_id"); w != it->end()) {
      if (!w->is_string() || w->get<std::string>().empty()) schema("llm.worker_id must be a non-empty string");
      stage.worker_id = w->get<std::string>();
    }
    if (auto inj = it->find("inject"); inj != it->end()) {
      if (!inj->is_boolean()) schema("llm.inject must be a boolean");
      stage.inject = inj->get<bool>();
    }
    m.llm = std::move(stage);
  }
  if (auto it = document.find("simulation"); it != document.end()) {
    if (it->contains("master_seed")) schema("simulation.master_seed is derived from seed");
    if (it->contains("options")) schema("simulation options come from the top-level options");
    json plan = *it;
    plan["options"] = report::options_to_json(m.options);
    m.simulation = report::plan_from_json(plan);
    m.simulation->master_seed = derive_seed(m.seed, "simulate");
    if (m.simulation->include_llm && !m.llm) schema("simulation.include_llm needs an llm stage");
  }
  for (auto s : m.strategies)
    if (s != CleaningStrategy::All && !m.ledger) schema(std::string(strategy_name(s)) + " needs inputs.ledger");
  if (m.simulation && m.simulation->cleaning != CleaningStrategy::All && !m.ledger)
    schema("simulation cleaning needs inputs.ledger");
  if (m.simulation && !m.gold) schema("simulation needs inputs.gold");
  return m;
}

RunManifest load_manifest(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::IoError, "manifest not found: " + path.string());
  json document;
  try {
    document = io::read_json(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::SchemaError, path.string() + ": " + e.detail());
  }
  try {
    return manifest_from_json(document, path.parent_path());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

PipelineSummary run_pipeline(const RunManifest& m, const fs::path& out_dir) {
  // Hash the manifest together with the bytes of every input it names.
  json input_hashes = json::object();
  auto hash_input = [&](const char* key, const std::optional<fs::path>& p) {
    if (p) input_hashes[key] = report::sha256_hex(io::read_text(*p));
  };
  hash_input("records", m.records);
  hash_input("categories", m.categories);
  hash_input("ledger", m.ledger);
  hash_input("gold", m.gold);
  hash_input("articles", m.articles);
  if (m.llm) {
    hash_input("abstracts", m.llm->abstracts);
    hash_input("replay", m.llm->replay);
    hash_input("instruction", m.llm->instruction);
  }
  const std::string hash =
      report::sha256_hex(json{{"manifest", m.source}, {"inputs", input_hashes}, {"version", report::toolkit_version()}}.dump());

  const CategorySet cats = m.categories ? io::read_categories(*m.categories) : CategorySet::coda19();
  std::vector<LabelRecord> records = filter_by_interface(io::read_records(m.records), m.interface_tag);
  const RemovalLedger ledger = m.ledger ? io::read_ledger(*m.ledger) : RemovalLedger{};
  std::optional<GoldLabels> gold;
  if (m.gold) gold = io::read_gold(*m.gold, cats);
  std::optional<ArticleMap> articles;
  if (m.articles) articles = io::read_article_map(*m.articles);
  // Validate every label before any output exists.
  build_label_matrix(records, cats);

  fs::create_directories(out_dir);
  OutputDir out(out_dir, hash);
  out.write_json("manifest.json", {{"manifest", m.source},
                                   {"input_sha256", input_hashes},
                                   {"toolkit_version", report::toolkit_version()},
                                   {"seed", m.seed}});

  std::map<std::string, std::optional<LabelIndex>> llm_labels;
  if (m.llm) {
    const auto abstracts = read_abstracts(m.llm->abstracts);
    AnnotationOptions annotation;
    if (m.llm->instruction) annotation.instruction = io::read_text(*m.llm->instruction);
    std::unique_ptr<LlmProvider> provider;
    if (m.llm->replay) provider = std::make_unique<ReplayProvider>(*m.llm->replay);
    else provider = HttpChatProvider::from_environment();
    AnnotationOutcome outcome = annotate_corpus(*provider, abstracts, m.llm->config, cats, annotation);
    llm_labels = outcome.consolidated;
    json runs = json::array();
    for (const auto& r : outcome.records) runs.push_back(json::parse(run_record_line(r, cats)));
    out.write_json("llm/annotation.json", {{"config", report::llm_config_to_json(m.llm->config)},
                                           {"worker_id", m.llm->worker_id},
                                           {"labels", report::llm_labels_to_json(llm_labels, cats)},
                                           {"cost", report::cost_to_json(outcome.cost)},
                                           {"runs", std::move(runs)}});
    if (gold) out.write_json("metrics/llm.json", metrics_with_coverage(parsed_only(llm_labels), *gold, cats));
  }

  struct Cell {
    CleaningStrategy strategy;
    Algorithm algorithm;
  };
  std::vector<Cell> cells;
  for (auto s : m.strategies)
    for (auto a : m.algorithms) cells.push_back({s, a});

  std::map<CleaningStrategy, LabelMatrix> human;
  std::map<CleaningStrategy, LabelMatrix> fused;
  for (auto s : m.strategies) {
    auto matrix = build_label_matrix(clean(records, ledger, s), cats);
    if (m.llm && m.llm->inject) fused.emplace(s, inject_as_worker(matrix, llm_labels, m.llm->worker_id));
    human.emplace(s, std::move(matrix));
  }

  auto run_cell = [&](const Cell& cell) {
    const std::string name = cell_name(cell.algorithm, cell.strategy);
    AggregationOptions options = m.options;
    options.em.seed = derive_seed(m.seed, "aggregate/" + name);
    const AggregationResult base = aggregate(cell.algorithm, human.at(cell.strategy), options);
    out.write_json("results/" + name + ".json", report::result_to_json(base, options));
    if (gold) out.write_json("metrics/" + name + ".json", metrics_with_coverage(base.assignment(), *gold, cats));
    if (!fused.count(cell.strategy)) return;

    options.em.seed = derive_seed(m.seed, "aggregate/" + name + "__llm");
    const AggregationResult with_llm = aggregate(cell.algorithm, fused.at(cell.strategy), options);
    out.write_json("results/" + name + "__llm.json", report::result_to_json(with_llm, options));
    if (!gold) return;
    out.write_json("metrics/" + name + "__llm.json", metrics_with_coverage(with_llm.assignment(), *gold, cats));

    const LabelAssignment crowd = base.assignment();
    const LabelAssignment combined = with_llm.assignment();
    const LabelAssignment llm_only = parsed_only(llm_labels);
    GoldLabels shared = covered_gold(covered_gold(*gold, crowd), combined);
    const GoldLabels shared_llm = covered_gold(shared, llm_only);
    json comparison = {{"flips_vs_crowd", report::flips_to_json(flip_analysis(crowd, combined, shared, cats), cats)},
                       {"flips_vs_llm", report::flips_to_json(flip_analysis(llm_only, combined, shared_llm, cats), cats)}};
    const auto a = correctness(crowd, shared);
    const auto b = correctness(combined, shared);
    std::vector<std::string> units;
    for (const auto& [item, label] : shared) units.push_back(item);
    if (a.size() >= 2) {
      comparison["ttest_sentence"] = report::ttest_to_json(paired_t_test(a, b));
      if (articles) {
        std::set<std::string> distinct;
        for (const auto& u : units)
          if (auto it = articles->find(u); it != articles->end()) distinct.insert(it->second);
        comparison["ttest_article"] =
            distinct.size() >= 2 ? report::ttest_to_json(paired_t_test(a, b, TestLevel::Article, units, &*articles))
                                 : json{{"status", "too_few_articles"}, {"n", distinct.size()}};
      }
    }
    out.write_json("comparisons/" + name + ".json", std::move(comparison));
  };

  std::atomic<std::size_t> next{0};
  std::mutex error_lock;
  std::exception_ptr error;
  auto work = [&] {
    for (;;) {
      const std::size_t c = next++;
      if (c >= cells.size()) return;
      try {
        run_cell(cells[c]);
      } catch (...) {
        std::lock_guard lock(error_lock);
        if (!error) error = std::current_exception();
        next = cells.size();
        return;
      }
    }
  };
  std::size_t threads = m.threads > 0 ? static_cast<std::size_t>(m.threads)
                                      : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(1, cells.size()));
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);

  if (m.simulation) {
    const auto matrix = build_label_matrix(clean(records, ledger, m.simulation->cleaning), cats);
    const auto curve = run_curve(matrix, *gold, *m.simulation, m.simulation->include_llm ? &llm_labels : nullptr,
                                 m.llm ? m.llm->worker_id : "llm");
    json doc = report::curve_to_json(curve);
    doc["plan"] = report::plan_to_json(*m.simulation);
    out.write_json("curve.json", std::move(doc));
    out.write_text("curve.csv", "# manifest_hash: " + hash + "\n" + report::curve_to_csv(curve));
  }

  return {hash, out.written()};
}

}  // namespace truthkit
