#include "intentgate/finetune.hpp"

#include "intentgate/error.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <numeric>

namespace intentgate {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

bool toggle_first_alpha(std::string& s) {
  for (auto& c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalpha(u)) {
      c = static_cast<char>(std::islower(u) ? std::toupper(u) : std::tolower(u));
      return true;
    }
  }
  return false;
}

}  // namespace

std::string augment_text(const std::string& text, std::mt19937_64& rng) {
  std::string out = text;
  switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
    case 0:
      std::transform(out.begin(), out.end(), out.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      break;
    case 1:
      toggle_first_alpha(out);
      break;
    default: {
      std::vector<std::size_t> spaces;
      for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i] == ' ') spaces.push_back(i);
      }
      if (spaces.empty()) {
        out += ' ';
      } else {
        const auto at = spaces[std::uniform_int_distribution<std::size_t>(0, spaces.size() - 1)(rng)];
        out.insert(at, 1, ' ');
      }
      break;
    }
  }
  if (out == text && !toggle_first_alpha(out)) out += ' ';
  return out;
}

LabeledDataset select_examples(const LabeledDataset& dataset, const IntentCatalog& catalog,
                               std::size_t per_intent, std::uint64_t seed) {
  if (per_intent < 1) throw InvalidArgument("select_examples: per_intent must be >= 1");
  for (const auto& item : dataset.items) {
    if (catalog.is_oos(item.label)) throw InvalidArgument("select_examples: dataset must be INS-only");
    if (!catalog.contains(item.label)) throw InvalidArgument("select_examples: unknown label '" + item.label + "'");
  }

  std::mt19937_64 rng(seed);
  LabeledDataset out;
  for (const auto& intent : catalog.intents) {
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < dataset.items.size(); ++i) {
      if (dataset.items[i].label == intent.name) pool.push_back(i);
    }
    if (pool.empty()) throw InvalidArgument("select_examples: empty intent class '" + intent.name + "'");

    if (pool.size() >= per_intent) {
      std::shuffle(pool.begin(), pool.end(), rng);
      for (std::size_t i = 0; i < per_intent; ++i) out.items.push_back(dataset.items[pool[i]]);
      continue;
    }
    for (auto i : pool) out.items.push_back(dataset.items[i]);
    const std::size_t missing = per_intent - pool.size();
    spdlog::info("select_examples: augmenting '{}' with {} items", intent.name, missing);
    for (std::size_t a = 0; a < missing; ++a) {
      LabeledItem copy = dataset.items[pool[a % pool.size()]];
      copy.utterance.text = augment_text(copy.utterance.text, rng);
      copy.utterance.id += "#aug" + std::to_string(a + 1);
      out.items.push_back(std::move(copy));
    }
  }
  return out;
}

FtsetResult build_ftset(const LabeledDataset& subset, const ClassifierModel& classifier,
                        const IntentCatalog& catalog, const FtsetOptions& options) {
  const auto n_classes = catalog.size();
  if (options.k < 1) throw InvalidArgument("build_ftset: k must be >= 1");
  if (n_classes <= options.k) {
    throw InvalidArgument("insufficient intent classes for negative sampling (N=" + std::to_string(n_classes) +
                          ", k=" + std::to_string(options.k) + ")");
  }
  classifier.check_compatible(catalog);

  std::mt19937_64 rng(options.seed);
  FtsetResult result;
  result.examples.reserve(2 * subset.size());
  for (const auto& item : subset.items) {
    const auto gold_idx = catalog.index_of(item.label);
    if (!gold_idx) throw InvalidArgument("build_ftset: label '" + item.label + "' is not an in-scope intent");
    if (!item.utterance.has_embedding()) {
      throw InvalidArgument("build_ftset: item '" + item.utterance.id + "' has no embedding");
    }

    FinetuneExample positive;
    positive.utterance = item.utterance.text;
    positive.gold = item.label;
    positive.candidates = predict_topk(classifier, item.utterance.embedding, options.k).labels();
    positive.target = item.label;
    positive.polarity = Polarity::positive;
    const auto& pc = positive.candidates;
    if (std::find(pc.begin(), pc.end(), item.label) == pc.end()) {
      ++result.gold_absent_positives;
      if (options.force_gold_in_candidates) positive.candidates.back() = item.label;
    }

    std::vector<std::size_t> others;
    for (std::size_t c = 0; c < n_classes; ++c) {
      if (c != *gold_idx) others.push_back(c);
    }
    std::shuffle(others.begin(), others.end(), rng);
    FinetuneExample negative;
    negative.utterance = item.utterance.text;
    negative.gold = item.label;
    for (std::size_t i = 0; i < options.k; ++i) negative.candidates.push_back(catalog.intents[others[i]].name);
    negative.target = catalog.oos_token;
    negative.polarity = Polarity::negative;

    result.examples.push_back(std::move(positive));
    result.examples.push_back(std::move(negative));
  }
  if (result.gold_absent_positives > 0) {
    spdlog::info("build_ftset: {} positive examples have the gold label outside the top-{}",
                 result.gold_absent_positives, options.k);
  }
  return result;
}

std::uint64_t epoch_example_seed(std::uint64_t base_seed, int epoch, std::size_t index) {
  std::uint64_t z = splitmix64(base_seed);
  z = splitmix64(z ^ static_cast<std::uint64_t>(epoch));
  return splitmix64(z ^ static_cast<std::uint64_t>(index));
}

std::vector<std::string> serialize_epoch(const std::vector<FinetuneExample>& examples, int epoch,
                                         std::uint64_t base_seed, const IntentCatalog& catalog,
                                         const PromptTemplate& tmpl) {
  std::vector<std::string> lines;
  lines.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    std::vector<IntentDef> candidates;
    for (const auto& name : ex.candidates) candidates.push_back(catalog.at(name));
    std::mt19937_64 rng(epoch_example_seed(base_seed, epoch, i));
    std::shuffle(candidates.begin(), candidates.end(), rng);

    nlohmann::ordered_json cands = nlohmann::ordered_json::array();
    for (const auto& c : candidates) cands.push_back({{"name", c.name}, {"guideline", c.guideline}});
    nlohmann::ordered_json rec;
    rec["utterance"] = ex.utterance;
    rec["candidates"] = std::move(cands);
    rec["target"] = ex.target;
    rec["prompt"] = build_prompt(ex.utterance, candidates, catalog.oos_token, tmpl).text;
    rec["completion"] = ex.target;
    lines.push_back(rec.dump());
  }
  return lines;
}

}  // namespace intentgate
