#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace intentgate {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kUnitNormTolerance = 1e-6;

struct IntentDef {
  std::string name;
  std::string guideline;  // may be empty until guidelines are generated
};

// The in-scope label space plus the sentinel used for out-of-scope.
struct IntentCatalog {
  std::vector<IntentDef> intents;
  std::string oos_token = "OOS";

  std::size_t size() const noexcept { return intents.size(); }
  bool is_oos(std::string_view label) const noexcept { return label == oos_token; }

  // Linear scan; catalogs are tens of intents.
  std::optional<std::size_t> index_of(std::string_view name) const noexcept;
  bool contains(std::string_view name) const noexcept { return index_of(name).has_value(); }
  const IntentDef& at(std::string_view name) const;
  std::vector<std::string> names() const;
};

struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const noexcept { return violations.empty(); }
  std::string summary() const;
};

ValidationReport validate_catalog(const IntentCatalog& catalog);

// Throws InvalidArgument with the report summary if the catalog is invalid.
void require_valid(const IntentCatalog& catalog);

struct EmbeddedUtterance {
  std::string id;
  std::string text;
  Vector embedding;  // empty until embedded; unit L2 norm otherwise

  bool has_embedding() const noexcept { return embedding.size() > 0; }
};

struct LabeledItem {
  EmbeddedUtterance utterance;
  std::string label;
};

struct LabeledDataset {
  std::vector<LabeledItem> items;

  std::size_t size() const noexcept { return items.size(); }
  bool empty() const noexcept { return items.empty(); }

  // Common embedding dimension, or 0 if nothing is embedded. Throws on mixed dimensions.
  std::size_t dimension() const;
  bool fully_embedded() const noexcept;

  // Row-per-item matrix of embeddings; requires fully_embedded().
  Matrix embedding_matrix() const;
};

// Checks unique ids, labels drawn from the catalog (or its oos_token unless ins_only),
// and the unit-norm invariant for present embeddings.
ValidationReport validate_dataset(const LabeledDataset& dataset, const IntentCatalog& catalog,
                                  bool ins_only = false);

// v / ||v||_2. Throws InvalidArgument on empty, non-finite, or zero input.
Vector normalize_embedding(std::span<const double> v);
Vector normalize_embedding(const Vector& v);

std::string trim(std::string_view s);

}  // namespace intentgate
