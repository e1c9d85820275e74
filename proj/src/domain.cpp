#include "intentgate/domain.hpp"

#include "intentgate/error.hpp"

#include <cmath>
#include <unordered_set>

namespace intentgate {

std::optional<std::size_t> IntentCatalog::index_of(std::string_view name) const noexcept {
  for (std::size_t i = 0; i < intents.size(); ++i) {
    if (intents[i].name == name) return i;
  }
  return std::nullopt;
}

const IntentDef& IntentCatalog::at(std::string_view name) const {
  auto idx = index_of(name);
  if (!idx) throw InvalidArgument("unknown intent '" + std::string(name) + "'");
  return intents[*idx];
}

std::vector<std::string> IntentCatalog::names() const {
  std::vector<std::string> out;
  out.reserve(intents.size());
  for (const auto& i : intents) out.push_back(i.name);
  return out;
}

std::string ValidationReport::summary() const {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += v;
  }
  return out;
}

ValidationReport validate_catalog(const IntentCatalog& catalog) {
  ValidationReport report;
  if (catalog.intents.empty()) report.violations.push_back("empty catalog");
  if (catalog.oos_token.empty()) report.violations.push_back("empty oos_token");

  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < catalog.intents.size(); ++i) {
    const auto& name = catalog.intents[i].name;
    if (name.empty()) {
      report.violations.push_back("empty name at index " + std::to_string(i));
      continue;
    }
    if (trim(name) != name) {
      report.violations.push_back("untrimmed name '" + name + "'");
    }
    if (!seen.insert(name).second) {
      report.violations.push_back("duplicate name '" + name + "'");
    }
    if (name == catalog.oos_token) {
      report.violations.push_back("sentinel collision: intent '" + name + "' equals oos_token");
    }
  }
  return report;
}

void require_valid(const IntentCatalog& catalog) {
  auto report = validate_catalog(catalog);
  if (!report.ok()) throw InvalidArgument("invalid intent catalog: " + report.summary());
}

std::size_t LabeledDataset::dimension() const {
  std::size_t dim = 0;
  for (const auto& item : items) {
    const auto d = static_cast<std::size_t>(item.utterance.embedding.size());
    if (d == 0) continue;
    if (dim == 0) {
      dim = d;
    } else if (d != dim) {
      throw InvalidArgument("mixed embedding dimensions (" + std::to_string(dim) + " vs " +
                            std::to_string(d) + ") at item '" + item.utterance.id + "'");
    }
  }
  return dim;
}

bool LabeledDataset::fully_embedded() const noexcept {
  for (const auto& item : items) {
    if (!item.utterance.has_embedding()) return false;
  }
  return true;
}

Matrix LabeledDataset::embedding_matrix() const {
  if (!fully_embedded()) throw InvalidArgument("dataset has items without embeddings");
  const auto dim = dimension();
  Matrix out(static_cast<Eigen::Index>(items.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < items.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = items[i].utterance.embedding.transpose();
  }
  return out;
}

ValidationReport validate_dataset(const LabeledDataset& dataset, const IntentCatalog& catalog,
                                  bool ins_only) {
  ValidationReport report;
  std::unordered_set<std::string> ids;
  std::size_t dim = 0;
  for (std::size_t i = 0; i < dataset.items.size(); ++i) {
    const auto& item = dataset.items[i];
    const auto& id = item.utterance.id;
    if (!ids.insert(id).second) report.violations.push_back("duplicate id '" + id + "'");

    if (catalog.is_oos(item.label)) {
      if (ins_only) report.violations.push_back("OOS label at item '" + id + "'");
    } else if (!catalog.contains(item.label)) {
      report.violations.push_back("unknown label '" + item.label + "' at item '" + id + "'");
    }

    const auto& e = item.utterance.embedding;
    if (e.size() == 0) continue;
    if (dim == 0) dim = static_cast<std::size_t>(e.size());
    if (static_cast<std::size_t>(e.size()) != dim) {
      report.violations.push_back("dimension mismatch at item '" + id + "'");
    } else if (!e.allFinite() || std::abs(e.norm() - 1.0) > kUnitNormTolerance) {
      report.violations.push_back("embedding not unit-norm at item '" + id + "'");
    }
  }
  return report;
}

Vector normalize_embedding(std::span<const double> v) {
  if (v.empty()) throw InvalidArgument("degenerate embedding: empty vector");
  Vector out = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  return normalize_embedding(out);
}

Vector normalize_embedding(const Vector& v) {
  if (v.size() == 0) throw InvalidArgument("degenerate embedding: empty vector");
  if (!v.allFinite()) throw InvalidArgument("degenerate embedding: non-finite entry");
  // stableNorm avoids overflow for very large entries.
  const double norm = v.stableNorm();
  if (norm == 0.0 || !std::isfinite(norm)) throw InvalidArgument("degenerate embedding: zero norm");
  return v / norm;
}

std::string trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n\f\v";
  const auto first = s.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(ws);
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace intentgate
