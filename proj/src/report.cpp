#include "truthkit/report.hpp"

#include <openssl/evp.h>

#include <cstdio>

#include "truthkit/error.hpp"
#include "truthkit/io.hpp"

#ifndef TRUTHKIT_VERSION
#define TRUTHKIT_VERSION "0.0.0"
#endif

namespace truthkit::report {

namespace {

[[noreturn]] void schema(const std::string& what) { throw Error(ErrorCode::SchemaError, what); }

void reject_unknown(const json& object, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!object.is_object()) schema(std::string(where) + " must be an object");
  for (const auto& [key, value] : object.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) schema(std::string(where) + ": unknown key \"" + key + "\"");
  }
}

template <class T>
T get_or(const json& object, const char* key, T fallback, std::string_view where) {
  auto it = object.find(key);
  if (it == object.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    schema(std::string(where) + ": \"" + key + "\" has the wrong type");
  }
}

json optional_number(const std::optional<double>& value) { return value ? json(*value) : json(nullptr); }

}  // namespace

const std::string& toolkit_version() {
  static const std::string version = TRUTHKIT_VERSION;
  return version;
}

json options_to_json(const AggregationOptions& options) {
  return {{"em",
           {{"max_iters", options.em.max_iters},
            {"tol", options.em.tol},
            {"smoothing", options.em.smoothing},
            {"seed", options.em.seed}}},
          {"glad", {{"learning_rate", options.glad.rate}, {"gradient_steps", options.glad.max_iters}}},
          {"mace_restarts", options.mace_restarts}};
}

AggregationOptions options_from_json(const json& object) {
  AggregationOptions options;
  reject_unknown(object, {"em", "glad", "mace_restarts"}, "options");
  if (auto it = object.find("em"); it != object.end()) {
    reject_unknown(*it, {"max_iters", "tol", "smoothing", "seed"}, "em");
    options.em.max_iters = get_or(*it, "max_iters", options.em.max_iters, "em");
    options.em.tol = get_or(*it, "tol", options.em.tol, "em");
    options.em.smoothing = get_or(*it, "smoothing", options.em.smoothing, "em");
    options.em.seed = get_or(*it, "seed", options.em.seed, "em");
  }
  if (auto it = object.find("glad"); it != object.end()) {
    reject_unknown(*it, {"learning_rate", "gradient_steps"}, "glad");
    options.glad.rate = get_or(*it, "learning_rate", options.glad.rate, "glad");
    options.glad.max_iters = get_or(*it, "gradient_steps", options.glad.max_iters, "glad");
  }
  options.mace_restarts = get_or(object, "mace_restarts", options.mace_restarts, "options");
  options.em.validate();
  if (options.glad.rate <= 0.0 || options.glad.max_iters < 1)
    throw Error(ErrorCode::InvalidArgument, "glad learning_rate must be > 0 and gradient_steps >= 1");
  if (options.mace_restarts < 1) throw Error(ErrorCode::InvalidArgument, "mace_restarts must be >= 1");
  return options;
}

json result_to_json(const AggregationResult& result, const AggregationOptions& options) {
  const auto& cats = result.categories;
  json labels = json::object();
  json posteriors = json::object();
  for (std::size_t i = 0; i < result.items.size(); ++i) {
    labels[result.items[i]] = cats.name(result.labels[i]);
    json row = json::object();
    for (std::size_t k = 0; k < cats.size(); ++k) row[cats.name(k)] = result.posteriors[i][k];
    posteriors[result.items[i]] = std::move(row);
  }
  json skills = json::object();
  for (std::size_t w = 0; w < result.workers.size(); ++w)
    skills[result.workers[w]] = w < result.worker_skill.size() ? json(result.worker_skill[w]) : json::array();
  json difficulty = json::object();
  for (std::size_t i = 0; i < result.item_difficulty.size(); ++i) difficulty[result.items[i]] = result.item_difficulty[i];

  AggregationOptions echo = options;
  echo.em.seed = result.seed;
  return {{"algorithm", algorithm_name(result.algorithm)},
          {"categories", io::categories_to_json(cats)},
          {"config", options_to_json(echo)},
          {"labels", std::move(labels)},
          {"posteriors", std::move(posteriors)},
          {"skill_kind", result.skill_kind},
          {"worker_skill", std::move(skills)},
          {"class_priors", result.class_priors},
          {"item_difficulty", std::move(difficulty)},
          {"trace", result.trace},
          {"restart_traces", result.restart_traces},
          {"warnings", result.warnings},
          {"metadata", result.metadata},
          {"iterations", result.iterations},
          {"converged", result.converged}};
}

LabelAssignment read_predictions(const std::filesystem::path& path, const CategorySet& categories) {
  LabelAssignment pred;
  if (path.extension() == ".jsonl") {
    io::for_each_jsonl(path, [&](const json& row, std::size_t line) {
      auto where = path.string() + ":" + std::to_string(line);
      auto item = row.find("item_id");
      auto label = row.find("label");
      if (item == row.end() || !item->is_string() || label == row.end() || !label->is_string())
        schema(where + ": expected string fields item_id and label");
      if (!pred.emplace(item->get<std::string>(), categories.index_of(label->get<std::string>())).second)
        schema(where + ": duplicate item " + item->get<std::string>());
    });
    return pred;
  }
  const json doc = io::read_json(path);
  auto labels = doc.find("labels");
  if (labels == doc.end() || !labels->is_object()) schema(path.string() + ": missing \"labels\" object");
  for (const auto& [item, label] : labels->items()) {
    if (!label.is_string()) schema(path.string() + ": label of " + item + " is not a string");
    pred.emplace(item, categories.index_of(label.get<std::string>()));
  }
  return pred;
}

json metrics_to_json(const MetricsReport& report, const CategorySet& categories) {
  json per_class = json::object();
  json per_class_display = json::object();
  auto shown = [](const std::optional<double>& v) { return v ? json(round3(*v)) : json(nullptr); };
  for (std::size_t k = 0; k < categories.size(); ++k) {
    const auto& s = report.per_class[k];
    per_class[categories.name(k)] = {
        {"precision", optional_number(s.precision)}, {"recall", optional_number(s.recall)}, {"f1", optional_number(s.f1)}};
    per_class_display[categories.name(k)] = {
        {"precision", shown(s.precision)}, {"recall", shown(s.recall)}, {"f1", shown(s.f1)}};
  }
  json normalized = row_normalized(report.confusion);
  return {{"n", report.n},
          {"accuracy", report.accuracy},
          {"accuracy_ci95", {report.accuracy_ci95.low, report.accuracy_ci95.high}},
          {"kappa", report.kappa},
          {"per_class", std::move(per_class)},
          {"labels", categories.labels()},
          {"confusion", report.confusion},
          {"confusion_normalized", std::move(normalized)},
          {"display",
           {{"accuracy", round3(report.accuracy)},
            {"accuracy_ci95", {round3(report.accuracy_ci95.low), round3(report.accuracy_ci95.high)}},
            {"kappa", round3(report.kappa)},
            {"per_class", std::move(per_class_display)}}}};
}

json ttest_to_json(const TTestResult& result) {
  json out = {{"status", result.status == TestStatus::Ok ? "ok" : "zero_variance"},
              {"n", result.n},
              {"mean_difference", result.mean_difference}};
  if (result.status == TestStatus::Ok) {
    out["t"] = result.t;
    out["p"] = result.p;
  } else {
    out["t"] = nullptr;
    out["p"] = nullptr;
  }
  return out;
}

json flips_to_json(const FlipReport& report, const CategorySet& categories) {
  auto counts = [](const FlipCounts& c) {
    return json{{"to_correct", c.to_correct}, {"to_incorrect", c.to_incorrect}, {"neutral", c.neutral}};
  };
  json per_class = json::object();
  for (std::size_t k = 0; k < categories.size(); ++k) per_class[categories.name(k)] = counts(report.per_class[k]);
  return {{"per_class", std::move(per_class)},
          {"total", counts(report.total)},
          {"base_correct", report.base_correct},
          {"fused_correct", report.fused_correct}};
}

json qc_to_json(const QcReport& report) {
  auto stats = [](const WorkerStats& s) {
    return json{{"worker_id", s.worker_id},
                {"accuracy_vs_partial_gold", optional_number(s.accuracy_vs_partial_gold)},
                {"majority_agreement_rate", s.majority_agreement_rate},
                {"rare_label_rate", s.rare_label_rate},
                {"n_labels", s.n_labels},
                {"n_gold_labels", s.n_gold_labels}};
  };
  json workers = json::array();
  for (const auto& s : report.workers) workers.push_back(stats(s));
  json per_batch = json::array();
  for (const auto& b : report.per_batch) {
    json row = stats(b.stats);
    row["batch_id"] = b.batch_id;
    per_batch.push_back(std::move(row));
  }
  return {{"workers", std::move(workers)}, {"per_batch", std::move(per_batch)}};
}

SimulationPlan plan_from_json(const json& object) {
  reject_unknown(object,
                 {"worker_counts", "rounds", "algorithms", "cleaning", "include_llm", "master_seed", "mmsr_retry_limit",
                  "sample_mode", "options", "threads"},
                 "plan");
  SimulationPlan plan;
  plan.worker_counts = get_or(object, "worker_counts", plan.worker_counts, "plan");
  plan.rounds = get_or(object, "rounds", plan.rounds, "plan");
  for (const auto& name : get_or(object, "algorithms", std::vector<std::string>{}, "plan"))
    plan.algorithms.push_back(parse_algorithm(name));
  plan.cleaning = parse_strategy(get_or(object, "cleaning", std::string(strategy_name(plan.cleaning)), "plan"));
  plan.include_llm = get_or(object, "include_llm", plan.include_llm, "plan");
  plan.master_seed = get_or(object, "master_seed", plan.master_seed, "plan");
  plan.mmsr_retry_limit = get_or(object, "mmsr_retry_limit", plan.mmsr_retry_limit, "plan");
  plan.sample_mode = parse_sample_mode(get_or(object, "sample_mode", std::string(sample_mode_name(plan.sample_mode)), "plan"));
  if (auto it = object.find("options"); it != object.end()) plan.options = options_from_json(*it);
  plan.threads = get_or(object, "threads", plan.threads, "plan");
  plan.validate();
  return plan;
}

json plan_to_json(const SimulationPlan& plan) {
  json algorithms = json::array();
  for (auto a : plan.algorithms) algorithms.push_back(algorithm_name(a));
  return {{"worker_counts", plan.worker_counts},
          {"rounds", plan.rounds},
          {"algorithms", std::move(algorithms)},
          {"cleaning", strategy_name(plan.cleaning)},
          {"include_llm", plan.include_llm},
          {"master_seed", plan.master_seed},
          {"mmsr_retry_limit", plan.mmsr_retry_limit},
          {"sample_mode", sample_mode_name(plan.sample_mode)},
          {"options", options_to_json(plan.options)}};
}

json curve_to_json(const SimulationCurve& curve) {
  json points = json::array();
  for (const auto& p : curve.points) {
    points.push_back({{"algorithm", algorithm_name(p.algorithm)},
                      {"worker_count", p.worker_count},
                      {"mean_accuracy", p.mean_accuracy},
                      {"std_accuracy", p.std_accuracy},
                      {"round_accuracies", p.round_accuracies},
                      {"failures", p.failures},
                      {"retries", p.retries}});
  }
  return {{"include_llm", curve.include_llm},
          {"cleaning", strategy_name(curve.cleaning)},
          {"sample_mode", sample_mode_name(curve.sample_mode)},
          {"points", std::move(points)}};
}

SimulationCurve curve_from_json(const json& object) {
  SimulationCurve curve;
  try {
    curve.include_llm = object.at("include_llm").get<bool>();
    curve.cleaning = parse_strategy(object.at("cleaning").get<std::string>());
    curve.sample_mode = parse_sample_mode(object.at("sample_mode").get<std::string>());
    for (const auto& p : object.at("points")) {
      CurvePoint point;
      point.algorithm = parse_algorithm(p.at("algorithm").get<std::string>());
      point.worker_count = p.at("worker_count").get<int>();
      point.mean_accuracy = p.at("mean_accuracy").get<double>();
      point.std_accuracy = p.at("std_accuracy").get<double>();
      point.round_accuracies = p.at("round_accuracies").get<std::vector<double>>();
      point.failures = p.at("failures").get<int>();
      point.retries = p.value("retries", 0);
      curve.points.push_back(std::move(point));
    }
  } catch (const json::exception& e) {
    schema(std::string("curve: ") + e.what());
  }
  return curve;
}

std::string curve_to_csv(const SimulationCurve& curve) {
  std::string out = "algorithm,worker_count,mean_accuracy,std_accuracy,rounds_ok,failures\n";
  char buf[128];
  for (const auto& p : curve.points) {
    std::snprintf(buf, sizeof buf, ",%d,%.6f,%.6f,%zu,%d\n", p.worker_count, p.mean_accuracy, p.std_accuracy,
                  p.round_accuracies.size(), p.failures);
    out += algorithm_name(p.algorithm);
    out += buf;
  }
  return out;
}

LlmConfig llm_config_from_json(const json& object) {
  reject_unknown(object,
                 {"temperature", "runs", "model", "max_concurrent_requests", "retry_limit", "backoff_ms",
                  "input_rate_per_1k", "output_rate_per_1k"},
                 "llm config");
  LlmConfig cfg;
  cfg.temperature = get_or(object, "temperature", cfg.temperature, "llm config");
  cfg.runs = get_or(object, "runs", cfg.runs, "llm config");
  cfg.model_name = get_or(object, "model", cfg.model_name, "llm config");
  cfg.max_concurrent_requests = get_or(object, "max_concurrent_requests", cfg.max_concurrent_requests, "llm config");
  cfg.retry_limit = get_or(object, "retry_limit", cfg.retry_limit, "llm config");
  cfg.backoff_base = std::chrono::milliseconds(get_or(object, "backoff_ms", static_cast<long long>(cfg.backoff_base.count()), "llm config"));
  if (auto it = object.find("input_rate_per_1k"); it != object.end()) {
    if (!it->is_string()) schema("llm config: input_rate_per_1k must be a decimal string");
    cfg.input_rate_per_1k = Money::parse(it->get<std::string>());
  }
  if (auto it = object.find("output_rate_per_1k"); it != object.end()) {
    if (!it->is_string()) schema("llm config: output_rate_per_1k must be a decimal string");
    cfg.output_rate_per_1k = Money::parse(it->get<std::string>());
  }
  cfg.validate();
  return cfg;
}

json llm_config_to_json(const LlmConfig& cfg) {
  return {{"temperature", cfg.temperature},
          {"runs", cfg.runs},
          {"model", cfg.model_name},
          {"max_concurrent_requests", cfg.max_concurrent_requests},
          {"retry_limit", cfg.retry_limit},
          {"backoff_ms", cfg.backoff_base.count()},
          {"input_rate_per_1k", cfg.input_rate_per_1k.to_dollars_string()},
          {"output_rate_per_1k", cfg.output_rate_per_1k.to_dollars_string()}};
}

json cost_to_json(const CostSummary& cost) {
  return {{"input_tokens", cost.input_tokens},
          {"output_tokens", cost.output_tokens},
          {"input_cost", cost.input_cost.to_dollars_string()},
          {"output_cost", cost.output_cost.to_dollars_string()},
          {"total", cost.total.to_dollars_string()},
          {"total_cents", cost.total.to_cents_string()}};
}

json llm_labels_to_json(const std::map<std::string, std::optional<LabelIndex>>& labels, const CategorySet& categories) {
  json out = json::object();
  for (const auto& [item, label] : labels) out[item] = label ? json(categories.name(*label)) : json(nullptr);
  return out;
}

std::map<std::string, std::optional<LabelIndex>> llm_labels_from_json(const json& object, const CategorySet& categories) {
  if (!object.is_object()) schema("LLM labels must be an object of item id -> label");
  std::map<std::string, std::optional<LabelIndex>> labels;
  for (const auto& [item, label] : object.items()) {
    if (label.is_null()) labels.emplace(item, std::nullopt);
    else if (label.is_string()) labels.emplace(item, categories.index_of(label.get<std::string>()));
    else schema("LLM label of " + item + " must be a string or null");
  }
  return labels;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::IoError, "SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

}  // namespace truthkit::report
