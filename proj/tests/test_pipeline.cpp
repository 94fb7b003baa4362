#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <tuple>

#include <sys/wait.h>

#include "truthkit/error.hpp"
#include "truthkit/io.hpp"
#include "truthkit/pipeline.hpp"
#include "truthkit/rng.hpp"

using namespace truthkit;
namespace fs = std::filesystem;

namespace {

const fs::path kDemo = TRUTHKIT_DEMO;

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("truthkit-test-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = io::read_text(e.path());
  return out;
}

ErrorCode code_of(auto&& fn, std::string* message = nullptr) {
  try {
    fn();
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

int cli(const std::string& args) {
  const std::string cmd = std::string("\"") + TRUTHKIT_CLI + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

nlohmann::json small_manifest() {
  return nlohmann::json{{"inputs", {{"records", (kDemo / "labels.jsonl").string()},
                                    {"gold", (kDemo / "gold.jsonl").string()}}},
                        {"algorithms", {"mv", "ds"}},
                        {"seed", 3},
                        {"threads", 1}};
}

}  // namespace

TEST_CASE("demo manifest parses") {
  const auto m = load_manifest(kDemo / "manifest.json");
  CHECK(m.strategies.size() == 3);
  CHECK(m.algorithms.size() == 7);
  REQUIRE(m.llm);
  CHECK(m.llm->replay);
  REQUIRE(m.simulation);
  CHECK(m.simulation->include_llm);
  CHECK(m.simulation->master_seed == derive_seed(2024, "simulate"));
  CHECK(m.records == kDemo / "labels.jsonl");
}

TEST_CASE("manifest errors") {
  std::string msg;
  auto doc = small_manifest();
  doc["inputs"]["gold"] = "missing-gold.jsonl";
  CHECK(code_of([&] { manifest_from_json(doc, kDemo); }, &msg) == ErrorCode::IoError);
  CHECK(msg.find("missing-gold.jsonl") != std::string::npos);

  doc = small_manifest();
  doc["algoritms"] = {"mv"};
  CHECK(code_of([&] { manifest_from_json(doc, kDemo); }) == ErrorCode::SchemaError);

  doc = small_manifest();
  doc["strategies"] = {"exclude-worker"};
  CHECK(code_of([&] { manifest_from_json(doc, kDemo); }) == ErrorCode::SchemaError);

  doc = small_manifest();
  doc["options"] = {{"em", {{"seed", 4}}}};
  CHECK(code_of([&] { manifest_from_json(doc, kDemo); }) == ErrorCode::SchemaError);

  doc = small_manifest();
  doc["inputs"].erase("gold");
  doc["simulation"] = {{"worker_counts", {1}}, {"rounds", 1}, {"algorithms", {"mv"}}};
  CHECK(code_of([&] { manifest_from_json(doc, kDemo); }) == ErrorCode::SchemaError);
}

TEST_CASE("pipeline outputs are deterministic and tagged with the manifest hash") {
  TempDir tmp;
  const auto m = manifest_from_json(small_manifest(), kDemo);
  const auto a = run_pipeline(m, tmp.path / "a");
  const auto b = run_pipeline(m, tmp.path / "b");
  CHECK(a.manifest_hash == b.manifest_hash);
  CHECK(a.manifest_hash.size() == 64);
  CHECK(a.written == b.written);
  const auto sa = snapshot(tmp.path / "a");
  CHECK(sa == snapshot(tmp.path / "b"));
  CHECK(sa.count("results/mv__all.json") == 1);
  CHECK(sa.count("metrics/ds__all.json") == 1);
  for (const auto& [name, text] : sa) {
    CAPTURE(name);
    CHECK(io::read_json(tmp.path / "a" / name).at("manifest_hash") == a.manifest_hash);
  }

  // Reusing an output directory never overwrites.
  CHECK(code_of([&] { run_pipeline(m, tmp.path / "a"); }) == ErrorCode::IoError);

  // A different seed is a different run.
  auto doc = small_manifest();
  doc["seed"] = 4;
  CHECK(run_pipeline(manifest_from_json(doc, kDemo), tmp.path / "c").manifest_hash != a.manifest_hash);
}

TEST_CASE("demo run covers every stage") {
  TempDir tmp;
  const auto summary = run_pipeline(load_manifest(kDemo / "manifest.json"), tmp.path / "out");
  const auto files = snapshot(tmp.path / "out");
  for (const char* name : {"manifest.json", "llm/annotation.json", "metrics/llm.json", "results/onecoin__all__llm.json",
                           "comparisons/onecoin__exclude-batch.json", "curve.json", "curve.csv"})
    CHECK_MESSAGE(files.count(name) == 1, name);
  CHECK(files.at("curve.csv").rfind("# manifest_hash: " + summary.manifest_hash + "\n", 0) == 0);
  const auto cmp = io::read_json(tmp.path / "out" / "comparisons/onecoin__all.json");
  CHECK(cmp.contains("flips_vs_crowd"));
  CHECK(cmp.contains("ttest_article"));
}

TEST_CASE("command line") {
  TempDir tmp;
  const auto d = kDemo.string();
  const auto t = tmp.path.string();
  CHECK(cli("--help") == 0);
  CHECK(cli("aggregate --records " + d + "/labels.jsonl --algo nope") == 2);
  CHECK(cli("aggregate --records " + d + "/missing.jsonl") != 0);
  CHECK(cli("ingest --records " + d + "/labels.jsonl --out " + t + "/records.jsonl") == 0);
  auto normalized = io::read_records(tmp.path / "records.jsonl");
  auto original = io::read_records(kDemo / "labels.jsonl");
  const auto by_cell = [](const LabelRecord& a, const LabelRecord& b) {
    return std::tie(a.item_id, a.worker_id) < std::tie(b.item_id, b.worker_id);
  };
  std::sort(original.begin(), original.end(), by_cell);
  CHECK(std::is_sorted(normalized.begin(), normalized.end(), by_cell));
  CHECK(normalized == original);
  CHECK(cli("aggregate --records " + d + "/labels.jsonl --algo ds --clean exclude-worker --ledger " + d +
            "/ledger.jsonl --seed 5 --out " + t + "/ds.json") == 0);
  CHECK(cli("evaluate --pred " + t + "/ds.json --gold " + d + "/gold.jsonl --out " + t + "/m.json") == 0);
  const auto metrics = io::read_json(tmp.path / "m.json");
  CHECK(metrics.at("n") == 12);
  CHECK(metrics.at("accuracy").get<double>() >= 0.0);

  CHECK(cli("llm-annotate --abstracts " + d + "/abstracts.jsonl --replay " + d + "/replay.jsonl --out " + t +
            "/llm.json") == 0);
  CHECK(cli("inject --records " + d + "/labels.jsonl --llm " + t + "/llm.json --out " + t + "/with_llm.jsonl") == 0);
  CHECK(cli("simulate --plan " + d + "/plan.json --records " + d + "/labels.jsonl --gold " + d +
            "/gold.jsonl --out " + t + "/curve.json") == 0);
  CHECK(cli("plot-data --curve " + t + "/curve.json --out " + t + "/curve.csv") == 0);
  CHECK(io::read_text(tmp.path / "curve.csv").rfind("algorithm,worker_count", 0) == 0);
  CHECK(cli("qc --records " + d + "/labels.jsonl --gold " + d + "/gold.jsonl --rank-by agreement --bottom-k 2 --out " +
            t + "/qc.json") == 0);
  CHECK(cli("run --manifest " + d + "/manifest.json --out-dir " + t + "/run") == 0);
  CHECK(cli("run --manifest " + d + "/nope.json --out-dir " + t + "/run2") == 2);
}
