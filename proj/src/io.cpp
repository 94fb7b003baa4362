#include "truthkit/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "truthkit/error.hpp"

namespace truthkit::io {

namespace {

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

const json& require(const json& object, const char* key) {
  auto it = object.find(key);
  if (it == object.end()) throw Error(ErrorCode::SchemaError, std::string("missing field \"") + key + "\"");
  return *it;
}

std::string require_string(const json& object, const char* key) {
  const auto& v = require(object, key);
  if (!v.is_string()) throw Error(ErrorCode::SchemaError, std::string("field \"") + key + "\" must be a string");
  return v.get<std::string>();
}

std::int64_t require_int(const json& object, const char* key) {
  const auto& v = require(object, key);
  if (!v.is_number_integer())
    throw Error(ErrorCode::SchemaError, std::string("field \"") + key + "\" must be an integer");
  return v.get<std::int64_t>();
}

}  // namespace

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
  }
}

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const json&, std::size_t)>& on_line) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json object;
    try {
      object = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::SchemaError, where(path, number) + e.what());
    }
    if (!object.is_object()) throw Error(ErrorCode::SchemaError, where(path, number) + "expected a JSON object");
    try {
      on_line(object, number);
    } catch (const Error& e) {
      throw Error(e.code(), where(path, number) + e.detail());
    }
  }
}

json record_to_json(const LabelRecord& r) {
  json j = {{"item_id", r.item_id},
            {"worker_id", r.worker_id},
            {"batch_id", r.batch_id},
            {"label", r.label},
            {"source", std::string(source_name(r.source))}};
  j["interface_tag"] = r.interface_tag ? json(*r.interface_tag) : json(nullptr);
  return j;
}

LabelRecord record_from_json(const json& object) {
  LabelRecord r;
  r.item_id = require_string(object, "item_id");
  r.worker_id = require_string(object, "worker_id");
  r.batch_id = require_int(object, "batch_id");
  if (r.batch_id < 0) throw Error(ErrorCode::SchemaError, "batch_id must be non-negative");
  r.label = require_string(object, "label");
  if (auto it = object.find("source"); it != object.end() && !it->is_null()) {
    if (!it->is_string()) throw Error(ErrorCode::SchemaError, "field \"source\" must be a string");
    r.source = parse_source(it->get<std::string>());
  }
  if (auto it = object.find("interface_tag"); it != object.end() && !it->is_null()) {
    if (!it->is_string()) throw Error(ErrorCode::SchemaError, "field \"interface_tag\" must be a string or null");
    r.interface_tag = it->get<std::string>();
  }
  return r;
}

std::vector<LabelRecord> read_records(const std::filesystem::path& path) {
  std::vector<LabelRecord> out;
  for_each_jsonl(path, [&](const json& o, std::size_t) { out.push_back(record_from_json(o)); });
  return out;
}

void write_records(const std::filesystem::path& path, const std::vector<LabelRecord>& records) {
  std::string text;
  for (const auto& r : records) text += record_to_json(r).dump() + "\n";
  write_text(path, text);
}

GoldLabels read_gold(const std::filesystem::path& path, const CategorySet& categories) {
  GoldLabels gold;
  for_each_jsonl(path, [&](const json& o, std::size_t) {
    auto item = require_string(o, "item_id");
    auto label = categories.index_of(require_string(o, "label"));
    if (!gold.emplace(item, label).second)
      throw Error(ErrorCode::SchemaError, "duplicate gold label for item '" + item + "'");
  });
  return gold;
}

RemovalLedger read_ledger(const std::filesystem::path& path) {
  RemovalLedger ledger;
  for_each_jsonl(path, [&](const json& o, std::size_t) {
    ledger.add(require_string(o, "worker_id"), require_int(o, "removed_in_batch"));
  });
  return ledger;
}

ArticleMap read_article_map(const std::filesystem::path& path) {
  ArticleMap map;
  for_each_jsonl(path, [&](const json& o, std::size_t) {
    auto item = require_string(o, "item_id");
    if (!map.emplace(item, require_string(o, "article_id")).second)
      throw Error(ErrorCode::SchemaError, "item '" + item + "' mapped twice");
  });
  return map;
}

json categories_to_json(const CategorySet& categories) {
  return {{"labels", categories.labels()}, {"tie_priority", categories.tie_priority()}};
}

CategorySet categories_from_json(const json& object) {
  try {
    return CategorySet(require(object, "labels").get<std::vector<std::string>>(),
                       require(object, "tie_priority").get<std::vector<std::string>>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("categories: ") + e.what());
  }
}

CategorySet read_categories(const std::filesystem::path& path) {
  return categories_from_json(read_json(path));
}

void write_exclusive(const std::filesystem::path& path, const std::string& contents) {
  std::FILE* f = std::fopen(path.c_str(), "wbx");
  if (!f) {
    throw Error(ErrorCode::IoError,
                "cannot create " + path.string() + ": " + std::strerror(errno));
  }
  const bool ok = std::fwrite(contents.data(), 1, contents.size(), f) == contents.size();
  if (std::fclose(f) != 0 || !ok) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << contents;
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

std::string dump(const json& object) { return object.dump(2) + "\n"; }

}  // namespace truthkit::io
