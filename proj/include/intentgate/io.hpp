#pragma once

#include "intentgate/domain.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace intentgate::io {

using nlohmann::json;

// {"oos_token": "OOS", "intents": [{"name": "...", "guideline": "..."}]}
json catalog_to_json(const IntentCatalog& catalog);
IntentCatalog catalog_from_json(const json& j);
IntentCatalog load_catalog(const std::filesystem::path& path);
void save_catalog(const IntentCatalog& catalog, const std::filesystem::path& path);

// One record per line: {"id", "text", "label", "embedding" (optional)}.
// Embeddings are normalized on load.
LabeledDataset parse_dataset_jsonl(std::istream& in);
LabeledDataset load_dataset(const std::filesystem::path& path);
void write_dataset_jsonl(const LabeledDataset& dataset, std::ostream& out);
void save_dataset(const LabeledDataset& dataset, const std::filesystem::path& path);

json vector_to_json(const Vector& v);
Vector vector_from_json(const json& j);
json matrix_to_json(const Matrix& m);  // row-major nested arrays
Matrix matrix_from_json(const json& j);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);
json load_json(const std::filesystem::path& path);
void save_json(const json& j, const std::filesystem::path& path);

}  // namespace intentgate::io
