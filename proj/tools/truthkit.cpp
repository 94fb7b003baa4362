#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <tuple>

#include <CLI11.hpp>

#include "truthkit/aggregation.hpp"
#include "truthkit/cleaning.hpp"
#include "truthkit/error.hpp"
#include "truthkit/evaluation.hpp"
#include "truthkit/io.hpp"
#include "truthkit/llm.hpp"
#include "truthkit/pipeline.hpp"
#include "truthkit/quality_control.hpp"
#include "truthkit/report.hpp"
#include "truthkit/simulation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace truthkit;

namespace {

struct Inputs {
  std::string records;
  std::string categories;
  std::string interface_tag;

  void add(CLI::App* cmd, bool records_required = true) {
    auto* opt = cmd->add_option("--records", records, "label records (JSONL)")->check(CLI::ExistingFile);
    if (records_required) opt->required();
    cmd->add_option("--categories", categories, "category set JSON (default: CODA-19)")->check(CLI::ExistingFile);
    cmd->add_option("--interface", interface_tag, "keep only records with this interface tag");
  }

  CategorySet category_set() const {
    return categories.empty() ? CategorySet::coda19() : io::read_categories(categories);
  }

  std::vector<LabelRecord> load() const {
    auto all = io::read_records(records);
    if (interface_tag.empty()) return all;
    return filter_by_interface(all, interface_tag);
  }
};

void emit(const std::string& out, const std::string& contents) {
  if (out.empty() || out == "-") std::cout << contents;
  else io::write_text(out, contents);
}

void emit_json(const std::string& out, const json& document) { emit(out, io::dump(document)); }

std::string records_jsonl(const std::vector<LabelRecord>& records) {
  std::string text;
  for (const auto& r : records) text += io::record_to_json(r).dump() + "\n";
  return text;
}

RemovalLedger load_ledger(const std::string& path, CleaningStrategy strategy) {
  if (path.empty()) {
    if (strategy != CleaningStrategy::All)
      throw Error(ErrorCode::InvalidArgument, std::string(strategy_name(strategy)) + " needs --ledger");
    return {};
  }
  return io::read_ledger(path);
}

std::map<std::string, std::optional<LabelIndex>> load_llm_labels(const std::string& path, const CategorySet& cats) {
  const json doc = io::read_json(path);
  auto labels = doc.find("labels");
  if (labels == doc.end()) throw Error(ErrorCode::SchemaError, path + ": missing \"labels\"");
  return report::llm_labels_from_json(*labels, cats);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"truthkit: crowd label cleaning, truth inference and evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", report::toolkit_version());

  // ingest
  Inputs ingest_in;
  std::string ingest_out;
  auto* ingest = app.add_subcommand("ingest", "validate label records and write them normalized and sorted");
  ingest_in.add(ingest);
  ingest->add_option("--out", ingest_out, "normalized records (JSONL, default stdout)");

  // clean
  Inputs clean_in;
  std::string clean_ledger, clean_strategy = "all", clean_out, clean_report;
  auto* clean_cmd = app.add_subcommand("clean", "apply a cleaning strategy to label records");
  clean_in.add(clean_cmd);
  clean_cmd->add_option("--ledger", clean_ledger, "removal ledger (JSONL)")->check(CLI::ExistingFile);
  clean_cmd->add_option("--strategy,--clean", clean_strategy, "all | exclude-worker | exclude-batch");
  clean_cmd->add_option("--out", clean_out, "kept records (JSONL, default stdout)");
  clean_cmd->add_option("--report", clean_report, "cleaning summary (JSON)");

  // aggregate
  Inputs agg_in;
  std::string agg_algo = "mv", agg_clean = "all", agg_ledger, agg_out, agg_options;
  std::uint64_t agg_seed = 0;
  auto* agg = app.add_subcommand("aggregate", "infer consensus labels");
  agg_in.add(agg);
  agg->add_option("--algo", agg_algo, "mv | ds | onecoin | glad | mace | mmsr | wawa | zbs");
  agg->add_option("--clean", agg_clean, "all | exclude-worker | exclude-batch");
  agg->add_option("--ledger", agg_ledger, "removal ledger (JSONL)")->check(CLI::ExistingFile);
  agg->add_option("--seed", agg_seed, "random seed");
  agg->add_option("--options", agg_options, "aggregation options (JSON)")->check(CLI::ExistingFile);
  agg->add_option("--out", agg_out, "result JSON (default stdout)");

  // llm-annotate
  std::string llm_abstracts, llm_replay, llm_checkpoint, llm_config, llm_instruction, llm_out, llm_categories,
      llm_model;
  bool llm_live = false;
  std::optional<double> llm_temperature;
  std::optional<int> llm_runs;
  auto* llm = app.add_subcommand("llm-annotate", "label abstract segments with an LLM (replayed or live)");
  llm->add_option("--abstracts", llm_abstracts, "abstracts JSONL")->required()->check(CLI::ExistingFile);
  auto* replay_opt = llm->add_option("--replay", llm_replay, "recorded run fixture (JSONL)")->check(CLI::ExistingFile);
  auto* live_opt = llm->add_flag("--live", llm_live, "call the endpoint from TRUTHKIT_API_BASE / TRUTHKIT_API_KEY");
  replay_opt->excludes(live_opt);
  llm->add_option("--checkpoint,--record", llm_checkpoint, "append finished runs here and resume from it");
  llm->add_option("--config", llm_config, "LLM config JSON")->check(CLI::ExistingFile);
  llm->add_option("--temperature", llm_temperature, "sampling temperature");
  llm->add_option("--runs", llm_runs, "independent runs per abstract");
  llm->add_option("--model", llm_model, "model name");
  llm->add_option("--instruction", llm_instruction, "instruction text file")->check(CLI::ExistingFile);
  llm->add_option("--categories", llm_categories, "category set JSON")->check(CLI::ExistingFile);
  llm->add_option("--out", llm_out, "annotation JSON (default stdout)");

  // inject
  Inputs inject_in;
  std::string inject_llm, inject_worker = "llm", inject_out;
  auto* inject = app.add_subcommand("inject", "add consolidated LLM labels as one more worker");
  inject_in.add(inject);
  inject->add_option("--llm", inject_llm, "annotation JSON from llm-annotate")->required()->check(CLI::ExistingFile);
  inject->add_option("--worker-id", inject_worker, "worker id for the LLM");
  inject->add_option("--out", inject_out, "combined records (JSONL, default stdout)");

  // evaluate
  std::string eval_pred, eval_gold, eval_baseline, eval_articles, eval_categories, eval_out;
  bool eval_wilson = false;
  auto* eval = app.add_subcommand("evaluate", "score predictions against gold labels");
  eval->add_option("--pred", eval_pred, "result JSON or predictions JSONL")->required()->check(CLI::ExistingFile);
  eval->add_option("--gold", eval_gold, "gold labels JSONL")->required()->check(CLI::ExistingFile);
  eval->add_option("--baseline", eval_baseline, "second prediction for flips and paired t-tests")
      ->check(CLI::ExistingFile);
  eval->add_option("--articles", eval_articles, "item -> article map for article-level tests")
      ->check(CLI::ExistingFile);
  eval->add_option("--categories", eval_categories, "category set JSON")->check(CLI::ExistingFile);
  eval->add_flag("--wilson", eval_wilson, "also report a Wilson interval");
  eval->add_option("--out", eval_out, "metrics JSON (default stdout)");

  // simulate
  Inputs sim_in;
  std::string sim_plan, sim_gold, sim_ledger, sim_llm, sim_out, sim_worker = "llm";
  auto* sim = app.add_subcommand("simulate", "accuracy versus number of workers per item");
  sim_in.add(sim);
  sim->add_option("--plan", sim_plan, "simulation plan JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--gold", sim_gold, "gold labels JSONL")->required()->check(CLI::ExistingFile);
  sim->add_option("--ledger", sim_ledger, "removal ledger (JSONL)")->check(CLI::ExistingFile);
  sim->add_option("--llm", sim_llm, "annotation JSON for include_llm plans")->check(CLI::ExistingFile);
  sim->add_option("--worker-id", sim_worker, "worker id for the LLM");
  sim->add_option("--out", sim_out, "curve JSON (default stdout)");

  // qc
  Inputs qc_in;
  std::string qc_gold, qc_rare = "Other", qc_out, qc_rank = "accuracy";
  std::size_t qc_bottom = 0, qc_top = 0;
  auto* qc = app.add_subcommand("qc", "per-worker monitoring statistics");
  qc_in.add(qc);
  qc->add_option("--gold", qc_gold, "partial gold labels JSONL")->required()->check(CLI::ExistingFile);
  qc->add_option("--rare", qc_rare, "label whose usage rate is tracked");
  qc->add_option("--rank-by", qc_rank, "accuracy | agreement | rare_rate");
  qc->add_option("--bottom-k", qc_bottom, "list the k lowest-ranked workers");
  qc->add_option("--top-k", qc_top, "list the k highest-ranked workers");
  qc->add_option("--out", qc_out, "QC report JSON (default stdout)");

  // plot-data
  std::string plot_curve, plot_out;
  auto* plot = app.add_subcommand("plot-data", "flatten a curve JSON into CSV");
  plot->add_option("--curve", plot_curve, "curve JSON from simulate")->required()->check(CLI::ExistingFile);
  plot->add_option("--out", plot_out, "CSV (default stdout)");

  // run
  std::string run_manifest, run_out;
  auto* run = app.add_subcommand("run", "execute a run manifest");
  run->add_option("--manifest", run_manifest, "manifest JSON")->required();
  run->add_option("--out-dir", run_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      const auto cats = ingest_in.category_set();
      auto records = ingest_in.load();
      const auto matrix = build_label_matrix(records, cats);
      // Cells are unique once the matrix builds, so this order is total.
      std::sort(records.begin(), records.end(), [](const LabelRecord& a, const LabelRecord& b) {
        return std::tie(a.item_id, a.worker_id) < std::tie(b.item_id, b.worker_id);
      });
      emit(ingest_out, records_jsonl(records));
      std::cerr << matrix.num_items() << " items, " << matrix.num_workers() << " workers, " << matrix.cells().size()
                << " labels\n";
    } else if (*clean_cmd) {
      const auto strategy = parse_strategy(clean_strategy);
      const auto records = clean_in.load();
      build_label_matrix(records, clean_in.category_set());
      const auto result = clean_with_report(records, load_ledger(clean_ledger, strategy), strategy);
      emit(clean_out, records_jsonl(result.kept));
      if (!clean_report.empty()) {
        json post = json::array();
        for (const auto& r : result.post_removal) post.push_back(io::record_to_json(r));
        io::write_text(clean_report, io::dump({{"strategy", strategy_name(strategy)},
                                               {"kept", result.kept.size()},
                                               {"dropped", result.dropped},
                                               {"post_removal", std::move(post)},
                                               {"emptied_items", result.emptied_items}}));
      }
    } else if (*agg) {
      const auto strategy = parse_strategy(agg_clean);
      const auto cats = agg_in.category_set();
      const auto kept = clean(agg_in.load(), load_ledger(agg_ledger, strategy), strategy);
      AggregationOptions options = agg_options.empty() ? AggregationOptions{} : report::options_from_json(io::read_json(agg_options));
      options.em.seed = agg_seed;
      const auto algorithm = parse_algorithm(agg_algo);
      const auto result = aggregate(algorithm, build_label_matrix(kept, cats), options);
      json doc = report::result_to_json(result, options);
      doc["cleaning"] = strategy_name(strategy);
      emit_json(agg_out, doc);
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
    } else if (*llm) {
      const auto cats = llm_categories.empty() ? CategorySet::coda19() : io::read_categories(llm_categories);
      LlmConfig cfg = llm_config.empty() ? LlmConfig{} : report::llm_config_from_json(io::read_json(llm_config));
      if (llm_temperature) cfg.temperature = *llm_temperature;
      if (llm_runs) cfg.runs = *llm_runs;
      if (!llm_model.empty()) cfg.model_name = llm_model;
      if (llm_replay.empty() && !llm_live)
        throw Error(ErrorCode::InvalidArgument, "choose --replay FIXTURE or --live");
      std::unique_ptr<LlmProvider> provider;
      if (llm_live) provider = HttpChatProvider::from_environment();
      else provider = std::make_unique<ReplayProvider>(llm_replay);
      AnnotationOptions options;
      if (!llm_instruction.empty()) options.instruction = io::read_text(llm_instruction);
      if (!llm_checkpoint.empty()) options.checkpoint = llm_checkpoint;
      const auto outcome = annotate_corpus(*provider, read_abstracts(llm_abstracts), cfg, cats, options);
      json runs = json::array();
      for (const auto& r : outcome.records) runs.push_back(json::parse(run_record_line(r, cats)));
      emit_json(llm_out, {{"config", report::llm_config_to_json(cfg)},
                          {"labels", report::llm_labels_to_json(outcome.consolidated, cats)},
                          {"cost", report::cost_to_json(outcome.cost)},
                          {"runs", std::move(runs)}});
      std::cerr << "cost $" << outcome.cost.total.to_cents_string() << " (" << outcome.cost.input_tokens
                << " input + " << outcome.cost.output_tokens << " output tokens)\n";
    } else if (*inject) {
      const auto cats = inject_in.category_set();
      const auto matrix = build_label_matrix(inject_in.load(), cats);
      const auto combined = inject_as_worker(matrix, load_llm_labels(inject_llm, cats), inject_worker);
      emit(inject_out, records_jsonl(combined.to_records()));
    } else if (*eval) {
      const auto cats = eval_categories.empty() ? CategorySet::coda19() : io::read_categories(eval_categories);
      const auto gold = io::read_gold(eval_gold, cats);
      const auto pred = report::read_predictions(eval_pred, cats);
      const auto report_ = metrics(pred, gold, cats);
      json doc = report::metrics_to_json(report_, cats);
      if (eval_wilson) {
        const auto w = wald_ci(report_.accuracy, report_.n, 0.95, IntervalMethod::Wilson);
        doc["accuracy_wilson95"] = {w.low, w.high};
      }
      if (!eval_baseline.empty()) {
        const auto base = report::read_predictions(eval_baseline, cats);
        doc["flips_vs_baseline"] = report::flips_to_json(flip_analysis(base, pred, gold, cats), cats);
        const auto a = correctness(base, gold);
        const auto b = correctness(pred, gold);
        std::vector<std::string> units;
        for (const auto& [item, label] : gold) units.push_back(item);
        doc["ttest_sentence"] = report::ttest_to_json(paired_t_test(a, b));
        if (!eval_articles.empty()) {
          const auto articles = io::read_article_map(eval_articles);
          doc["ttest_article"] = report::ttest_to_json(paired_t_test(a, b, TestLevel::Article, units, &articles));
        }
      }
      emit_json(eval_out, doc);
    } else if (*sim) {
      const auto cats = sim_in.category_set();
      const auto plan = report::plan_from_json(io::read_json(sim_plan));
      const auto kept = clean(sim_in.load(), load_ledger(sim_ledger, plan.cleaning), plan.cleaning);
      std::optional<std::map<std::string, std::optional<LabelIndex>>> llm_labels;
      if (!sim_llm.empty()) llm_labels = load_llm_labels(sim_llm, cats);
      const auto curve = run_curve(build_label_matrix(kept, cats), io::read_gold(sim_gold, cats), plan,
                                   llm_labels ? &*llm_labels : nullptr, sim_worker);
      json doc = report::curve_to_json(curve);
      doc["plan"] = report::plan_to_json(plan);
      emit_json(sim_out, doc);
    } else if (*qc) {
      const auto cats = qc_in.category_set();
      const auto records = qc_in.load();
      const auto qc_report = worker_statistics(records, io::read_gold(qc_gold, cats), qc_rare, cats);
      json doc = report::qc_to_json(qc_report);
      const auto metric = parse_rank_metric(qc_rank);
      doc["rank_by"] = qc_rank;
      if (qc_bottom) doc["bottom"] = rank_workers(qc_report.workers, metric, qc_bottom, RankEnd::Bottom);
      if (qc_top) doc["top"] = rank_workers(qc_report.workers, metric, qc_top, RankEnd::Top);
      emit_json(qc_out, doc);
    } else if (*plot) {
      emit(plot_out, report::curve_to_csv(report::curve_from_json(io::read_json(plot_curve))));
    } else if (*run) {
      const auto start = std::chrono::steady_clock::now();
      const auto manifest = load_manifest(run_manifest);
      const auto summary = run_pipeline(manifest, run_out);
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
      std::cout << "manifest " << summary.manifest_hash << "\n";
      for (const auto& p : summary.written) std::cout << "  wrote " << p.string() << "\n";
      std::printf("finished in %.2f s\n", elapsed.count());
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
