#pragma once

#include "intentgate/classifier.hpp"
#include "intentgate/domain.hpp"
#include "intentgate/llm_gate.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace intentgate {

enum class Polarity { positive, negative };

struct FinetuneExample {
  std::string utterance;
  std::string gold;                     // gold intent of the source utterance
  std::vector<std::string> candidates;  // k intent names
  std::string target;                   // gold (positive) or oos_token (negative)
  Polarity polarity = Polarity::positive;
};

// Whitespace/casing jitter that keeps every non-space character. Used to pad small intents.
std::string augment_text(const std::string& text, std::mt19937_64& rng);

// Exactly `per_intent` items for every catalog intent, drawn without replacement; intents with
// fewer items keep all originals and are padded with augmented copies (ids suffixed "#augN").
LabeledDataset select_examples(const LabeledDataset& dataset, const IntentCatalog& catalog,
                               std::size_t per_intent, std::uint64_t seed);

struct FtsetOptions {
  std::size_t k = 3;
  std::uint64_t seed = 0;
  // Replace the lowest-ranked candidate with the gold label when the classifier misses it.
  bool force_gold_in_candidates = false;
};

struct FtsetResult {
  std::vector<FinetuneExample> examples;  // positive, negative, positive, negative, ...
  std::size_t gold_absent_positives = 0;  // positives whose candidates miss the gold label
};

// For each (u, y_u): one positive with the classifier's top-k and target y_u, and one negative
// with k distinct intents sampled from the catalog minus y_u and target oos_token.
FtsetResult build_ftset(const LabeledDataset& subset, const ClassifierModel& classifier,
                        const IntentCatalog& catalog, const FtsetOptions& options);

// Seed for one example's candidate shuffle in one epoch.
std::uint64_t epoch_example_seed(std::uint64_t base_seed, int epoch, std::size_t index);

// One JSONL line per example:
// {"utterance", "candidates": [{"name", "guideline"}], "target", "prompt", "completion"}.
// Candidate order is reshuffled per (base_seed, epoch, index).
std::vector<std::string> serialize_epoch(const std::vector<FinetuneExample>& examples, int epoch,
                                         std::uint64_t base_seed, const IntentCatalog& catalog,
                                         const PromptTemplate& tmpl = PromptTemplate::default_gate());

}  // namespace intentgate
