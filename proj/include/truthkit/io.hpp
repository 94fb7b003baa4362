#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "truthkit/core.hpp"

namespace truthkit::io {

using nlohmann::json;

/// Calls `on_line(object, line_number)` for every non-blank line. Parse and
/// schema failures surface as SchemaError "path:line: ...".
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const json&, std::size_t)>& on_line);

std::vector<LabelRecord> read_records(const std::filesystem::path& path);
void write_records(const std::filesystem::path& path, const std::vector<LabelRecord>& records);
json record_to_json(const LabelRecord& record);
LabelRecord record_from_json(const json& object);

GoldLabels read_gold(const std::filesystem::path& path, const CategorySet& categories);
RemovalLedger read_ledger(const std::filesystem::path& path);
ArticleMap read_article_map(const std::filesystem::path& path);

/// {"labels": [...], "tie_priority": [...]}
CategorySet read_categories(const std::filesystem::path& path);
json categories_to_json(const CategorySet& categories);
CategorySet categories_from_json(const json& object);

json read_json(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

/// Fails with IoError if the file already exists (exclusive creation).
void write_exclusive(const std::filesystem::path& path, const std::string& contents);
/// Truncating write.
void write_text(const std::filesystem::path& path, const std::string& contents);

/// Pretty-printed with a trailing newline; key order is sorted so output is
/// byte-stable.
std::string dump(const json& object);

}  // namespace truthkit::io
