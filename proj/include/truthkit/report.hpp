#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "truthkit/aggregation.hpp"
#include "truthkit/evaluation.hpp"
#include "truthkit/llm.hpp"
#include "truthkit/quality_control.hpp"
#include "truthkit/simulation.hpp"

namespace truthkit::report {

using nlohmann::json;

const std::string& toolkit_version();

json options_to_json(const AggregationOptions& options);
/// Missing keys keep their defaults; unknown keys are a SchemaError.
AggregationOptions options_from_json(const json& object);

/// labels and posteriors keyed by item id, worker_skill keyed by worker id.
json result_to_json(const AggregationResult& result, const AggregationOptions& options);

/// Reads predictions from an aggregation result JSON (its "labels" object) or
/// from JSONL lines {"item_id", "label"}.
LabelAssignment read_predictions(const std::filesystem::path& path, const CategorySet& categories);

/// Raw values plus a "display" block rounded to three decimals.
json metrics_to_json(const MetricsReport& report, const CategorySet& categories);
json ttest_to_json(const TTestResult& result);
json flips_to_json(const FlipReport& report, const CategorySet& categories);
json qc_to_json(const QcReport& report);

SimulationPlan plan_from_json(const json& object);
json plan_to_json(const SimulationPlan& plan);
json curve_to_json(const SimulationCurve& curve);
SimulationCurve curve_from_json(const json& object);
/// algorithm,worker_count,mean_accuracy,std_accuracy,rounds_ok,failures
std::string curve_to_csv(const SimulationCurve& curve);

/// {"temperature", "runs", "model", "max_concurrent_requests", "retry_limit",
///  "backoff_ms", "input_rate_per_1k", "output_rate_per_1k"}; rates are
/// decimal dollar strings such as "0.03".
LlmConfig llm_config_from_json(const json& object);
json llm_config_to_json(const LlmConfig& config);
json cost_to_json(const CostSummary& cost);
/// Item id -> label name, null for parse failures.
json llm_labels_to_json(const std::map<std::string, std::optional<LabelIndex>>& labels, const CategorySet& categories);
std::map<std::string, std::optional<LabelIndex>> llm_labels_from_json(const json& object, const CategorySet& categories);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);

}  // namespace truthkit::report
