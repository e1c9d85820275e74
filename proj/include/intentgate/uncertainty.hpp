#pragma once

#include "intentgate/domain.hpp"

#include <json.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace intentgate {

// Non-negative sparse code of one query against a dictionary.
struct SparseCode {
  std::vector<std::size_t> atoms;  // selected atom indices, by descending inner product
  Vector weights;                  // non-negative, aligned with `atoms`
  double residual = 0.0;           // ||x - A_S w||^2
};

struct NnkFitConfig {
  std::size_t n_atoms = 20;
  std::size_t neighbors = 10;
  int iterations = 20;
  std::uint64_t seed = 0;
};

struct NnkFitMeta {
  int iterations = 0;
  std::uint64_t seed = 0;
  double final_error = 0.0;
  // Mean training residual after seeding (index 0) and after each iteration.
  std::vector<double> error_trace;
  int rejected_updates = 0;
};

// Learned dictionary of unit atoms (rows) used for NNK-Means reconstruction-error scoring.
class NnkDictionary {
 public:
  NnkDictionary() = default;
  NnkDictionary(Matrix atoms, std::size_t neighbors, NnkFitMeta meta = {});

  const Matrix& atoms() const noexcept { return atoms_; }
  std::size_t num_atoms() const noexcept { return static_cast<std::size_t>(atoms_.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(atoms_.cols()); }
  std::size_t neighbors() const noexcept { return neighbors_; }
  const NnkFitMeta& meta() const noexcept { return meta_; }

  // Same atoms, different coding sparsity.
  NnkDictionary with_neighbors(std::size_t neighbors) const;

 private:
  Matrix atoms_;  // M x d
  std::size_t neighbors_ = 1;
  NnkFitMeta meta_;
};

// Picks the K atoms with the largest inner product with x and solves the NNLS problem on them.
SparseCode nnk_code(const NnkDictionary& dictionary, const Vector& x);

// Rows of `embeddings` must be unit vectors. Seeds atoms by D^2 sampling, then alternates
// coding with a least-squares atom update, backtracking towards it when the full step
// overshoots. An update that would raise the mean training residual is rejected, so the
// residual trace never increases.
NnkDictionary fit_nnk(const Matrix& embeddings, const NnkFitConfig& config);

// Default dictionary size: 20 atoms per intent class, capped by the training-set size.
std::size_t default_atom_count(std::size_t n_train, std::size_t n_classes);

// Mean training residual of `embeddings` under `dictionary`.
double mean_residual(const NnkDictionary& dictionary, const Matrix& embeddings);

enum class ScoreMethod { nnk, entropy, energy };

ScoreMethod parse_score_method(std::string_view name);
std::string_view to_string(ScoreMethod method);

// nnk and entropy are >= 0. energy is -logsumexp(logits) and may be negative; for all three,
// larger means more uncertain.
struct UncertaintyScore {
  double value = 0.0;
  ScoreMethod method = ScoreMethod::nnk;
};

struct ScoringInput {
  const NnkDictionary* dictionary = nullptr;
  const Vector* embedding = nullptr;
  const Vector* probabilities = nullptr;
  const Vector* logits = nullptr;
};

double entropy_score(std::span<const double> probabilities);
double energy_score(std::span<const double> logits);

UncertaintyScore score(const ScoringInput& input, ScoreMethod method);

nlohmann::json dictionary_to_json(const NnkDictionary& dictionary);
NnkDictionary dictionary_from_json(const nlohmann::json& j);

}  // namespace intentgate
