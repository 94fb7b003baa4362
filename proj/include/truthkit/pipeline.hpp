#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "truthkit/aggregation.hpp"
#include "truthkit/cleaning.hpp"
#include "truthkit/llm.hpp"
#include "truthkit/simulation.hpp"

namespace truthkit {

struct LlmStage {
  std::filesystem::path abstracts;
  /// Recorded run fixture; without one the stage calls the live endpoint.
  std::optional<std::filesystem::path> replay;
  std::optional<std::filesystem::path> instruction;
  LlmConfig config;
  std::string worker_id = "llm";
  bool inject = true;  // also aggregate crowd + LLM
};

/// Parsed run manifest. Relative paths resolve against the manifest's
/// directory; all seeds derive from `seed`.
struct RunManifest {
  std::filesystem::path records;
  std::optional<std::filesystem::path> categories;
  std::optional<std::filesystem::path> ledger;
  std::optional<std::filesystem::path> gold;
  std::optional<std::filesystem::path> articles;
  std::optional<std::string> interface_tag;
  std::vector<CleaningStrategy> strategies{CleaningStrategy::All};
  std::vector<Algorithm> algorithms{Algorithm::MajorityVote};
  std::uint64_t seed = 0;
  AggregationOptions options;
  std::optional<LlmStage> llm;
  std::optional<SimulationPlan> simulation;
  int threads = 0;  // concurrent cells; 0 = hardware concurrency

  nlohmann::json source;  // the manifest document as read
};

/// Throws SchemaError naming the manifest for malformed documents and IoError
/// naming the path of any referenced file that does not exist.
RunManifest load_manifest(const std::filesystem::path& path);
RunManifest manifest_from_json(const nlohmann::json& document, const std::filesystem::path& base_dir);

struct PipelineSummary {
  std::string manifest_hash;
  std::vector<std::filesystem::path> written;  // relative to the output dir, sorted
};

/// Writes, under out_dir (created if needed; files are created exclusively):
///   manifest.json                          echo with hashes of every input
///   results/<algo>__<strategy>.json        one per cell
///   results/<algo>__<strategy>__llm.json   crowd + LLM cells (llm.inject)
///   metrics/<same name>.json               when gold is given
///   comparisons/<algo>__<strategy>.json    flips and paired t-tests (llm.inject with gold)
///   llm/annotation.json, metrics/llm.json  LLM stage
///   curve.json, curve.csv                  simulation stage
/// Each JSON output carries "manifest_hash"; no output depends on wall-clock.
PipelineSummary run_pipeline(const RunManifest& manifest, const std::filesystem::path& out_dir);

}  // namespace truthkit
