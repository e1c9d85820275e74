#pragma once

#include "intentgate/domain.hpp"

#include <chrono>
#include <functional>
#include <memory>
#include <semaphore>
#include <string>
#include <unordered_map>
#include <vector>

namespace intentgate {

// Side-channel describing what a gate prompt asks. Never sent over the wire; lets in-process
// mock generators answer without parsing the rendered prompt.
struct GateContext {
  std::string utterance;
  std::vector<std::string> candidates;  // in prompt order
  std::string oos_token;
};

struct GenerateRequest {
  std::string prompt;
  int max_tokens = 32;
  double temperature = 0.0;
  const GateContext* context = nullptr;
};

class EmbedBackend {
 public:
  virtual ~EmbedBackend() = default;
  // Raw (not necessarily normalized) embeddings, one per text, constant dimension.
  virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;
  virtual std::string describe() const = 0;
};

class GenerateBackend {
 public:
  virtual ~GenerateBackend() = default;
  virtual std::string generate(const GenerateRequest& request) = 0;
  virtual std::string describe() const = 0;
};

// Deterministic feature-hashing embedder: lowercase word unigrams and character trigrams are
// hashed into `dim` signed buckets. Stands in for an encoder backend.
class HashingEmbedder final : public EmbedBackend {
 public:
  explicit HashingEmbedder(std::size_t dim = 64);
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;
  std::vector<double> embed_one(const std::string& text) const;
  std::string describe() const override;

 private:
  std::size_t dim_;
};

// Always returns the same text.
class FixedGenerator final : public GenerateBackend {
 public:
  explicit FixedGenerator(std::string text) : text_(std::move(text)) {}
  std::string generate(const GenerateRequest&) override { return text_; }
  std::string describe() const override { return "mock:text=" + text_; }

 private:
  std::string text_;
};

// Answers the first candidate (keeps the classifier's top-1). Without a gate context the
// candidate is read from the first "- name" line of the default prompt layout.
class TopCandidateGenerator final : public GenerateBackend {
 public:
  std::string generate(const GenerateRequest& request) override;
  std::string describe() const override { return "mock:top1"; }
};

// Answers the gold label when it is among the candidates, otherwise the oos_token.
// Gold labels are looked up by utterance text.
class OracleGenerator final : public GenerateBackend {
 public:
  explicit OracleGenerator(std::unordered_map<std::string, std::string> gold_by_text)
      : gold_(std::move(gold_by_text)) {}
  std::string generate(const GenerateRequest& request) override;
  std::string describe() const override { return "mock:oracle"; }

 private:
  std::unordered_map<std::string, std::string> gold_;
};

// Wraps a callable; handy in tests.
class FunctionGenerator final : public GenerateBackend {
 public:
  using Fn = std::function<std::string(const GenerateRequest&)>;
  explicit FunctionGenerator(Fn fn, std::string name = "mock:function")
      : fn_(std::move(fn)), name_(std::move(name)) {}
  std::string generate(const GenerateRequest& request) override { return fn_(request); }
  std::string describe() const override { return name_; }

 private:
  Fn fn_;
  std::string name_;
};

// Caps the number of in-flight calls to the wrapped backend.
class ConcurrencyLimitedGenerator final : public GenerateBackend {
 public:
  ConcurrencyLimitedGenerator(std::shared_ptr<GenerateBackend> inner, std::ptrdiff_t max_in_flight);
  std::string generate(const GenerateRequest& request) override;
  std::string describe() const override { return inner_->describe(); }

 private:
  std::shared_ptr<GenerateBackend> inner_;
  std::counting_semaphore<1024> slots_;
};

// Embeds every item lacking an embedding (batched) and normalizes the result.
void embed_dataset(LabeledDataset& dataset, EmbedBackend& backend, std::size_t batch_size = 64);

// Embeds and normalizes a single text.
Vector embed_text(EmbedBackend& backend, const std::string& text);

}  // namespace intentgate
