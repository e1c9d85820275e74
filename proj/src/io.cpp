#include "intentgate/io.hpp"

#include "intentgate/error.hpp"

#include <fstream>
#include <sstream>

namespace intentgate::io {

json catalog_to_json(const IntentCatalog& catalog) {
  json intents = json::array();
  for (const auto& i : catalog.intents) {
    intents.push_back({{"name", i.name}, {"guideline", i.guideline}});
  }
  return {{"oos_token", catalog.oos_token}, {"intents", std::move(intents)}};
}

IntentCatalog catalog_from_json(const json& j) {
  if (!j.is_object() || !j.contains("intents") || !j["intents"].is_array()) {
    throw InvalidArgument("catalog: expected object with an 'intents' array");
  }
  IntentCatalog catalog;
  catalog.oos_token = j.value("oos_token", std::string("OOS"));
  for (const auto& entry : j["intents"]) {
    if (!entry.is_object() || !entry.contains("name") || !entry["name"].is_string()) {
      throw InvalidArgument("catalog: every intent needs a string 'name'");
    }
    catalog.intents.push_back(
        {trim(entry["name"].get<std::string>()), entry.value("guideline", std::string())});
  }
  require_valid(catalog);
  return catalog;
}

IntentCatalog load_catalog(const std::filesystem::path& path) {
  return catalog_from_json(load_json(path));
}

void save_catalog(const IntentCatalog& catalog, const std::filesystem::path& path) {
  save_json(catalog_to_json(catalog), path);
}

LabeledDataset parse_dataset_jsonl(std::istream& in) {
  LabeledDataset dataset;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw InvalidArgument("dataset line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!rec.is_object() || !rec.contains("text") || !rec["text"].is_string()) {
      throw InvalidArgument("dataset line " + std::to_string(line_no) + ": missing 'text'");
    }
    LabeledItem item;
    item.utterance.id = rec.contains("id") ? (rec["id"].is_string() ? rec["id"].get<std::string>()
                                                                    : rec["id"].dump())
                                           : "line-" + std::to_string(line_no);
    item.utterance.text = rec["text"].get<std::string>();
    if (!rec.contains("label") || !rec["label"].is_string() || trim(rec["label"].get<std::string>()).empty()) {
      throw InvalidArgument("dataset line " + std::to_string(line_no) + ": missing 'label'");
    }
    item.label = trim(rec["label"].get<std::string>());
    if (rec.contains("embedding") && !rec["embedding"].is_null()) {
      try {
        item.utterance.embedding = normalize_embedding(vector_from_json(rec["embedding"]));
      } catch (const Error& e) {
        throw InvalidArgument("dataset line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    dataset.items.push_back(std::move(item));
  }
  dataset.dimension();  // rejects mixed dimensions
  return dataset;
}

LabeledDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open dataset file " + path.string());
  return parse_dataset_jsonl(in);
}

void write_dataset_jsonl(const LabeledDataset& dataset, std::ostream& out) {
  for (const auto& item : dataset.items) {
    json rec = {{"id", item.utterance.id}, {"text", item.utterance.text}, {"label", item.label}};
    if (item.utterance.has_embedding()) rec["embedding"] = vector_to_json(item.utterance.embedding);
    out << rec.dump() << '\n';
  }
}

void save_dataset(const LabeledDataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  write_dataset_jsonl(dataset, out);
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Vector vector_from_json(const json& j) {
  if (!j.is_array()) throw InvalidArgument("expected a numeric array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InvalidArgument("expected a numeric array");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

json matrix_to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vector_to_json(m.row(r).transpose()));
  return out;
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_array()) throw InvalidArgument("expected an array of rows");
  if (j.empty()) return Matrix(0, 0);
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Matrix m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    Vector row = vector_from_json(j[r]);
    if (row.size() != cols) throw InvalidArgument("ragged matrix rows");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << content;
}

json load_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

void save_json(const json& j, const std::filesystem::path& path) {
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace intentgate::io
