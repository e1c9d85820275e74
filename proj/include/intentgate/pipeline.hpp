#pragma once

#include "intentgate/backend.hpp"
#include "intentgate/classifier.hpp"
#include "intentgate/domain.hpp"
#include "intentgate/llm_gate.hpp"
#include "intentgate/router.hpp"
#include "intentgate/uncertainty.hpp"

#include <json.hpp>

#include <memory>
#include <optional>
#include <string>

namespace intentgate {

enum class FailurePolicy { fail, degrade };
FailurePolicy parse_failure_policy(std::string_view name);
std::string_view to_string(FailurePolicy policy);

enum class Source { classifier, llm };
std::string_view to_string(Source source);

struct PipelineOptions {
  RoutingStrategy strategy = resolve_strategy("moderate");
  std::size_t k = 3;
  ScoreMethod score_method = ScoreMethod::nnk;
  FailurePolicy on_backend_failure = FailurePolicy::degrade;
  GateOptions gate;
};

struct StageTimings {
  double embed_ms = 0.0;
  double classify_ms = 0.0;
  double score_ms = 0.0;
  double llm_ms = 0.0;
};

// Outcome of one utterance through the cascade.
struct ClassifyResponse {
  std::string request_id;
  std::string intent;  // final label; the oos_token only when the gate chose it
  bool oos = false;
  Source source = Source::classifier;
  bool escalated = false;
  bool degraded = false;  // escalation failed and the classifier answer was kept
  std::string degraded_reason;
  double uncertainty = 0.0;
  ScoreMethod score_method = ScoreMethod::nnk;
  RoutingStrategy strategy;
  TopKPrediction topk;
  std::optional<ParsePath> parse_path;
  std::string llm_raw;
  StageTimings timings;
};

nlohmann::json response_to_json(const ClassifyResponse& response);

// Classifier output and uncertainty for one embedding, before routing.
struct Assessment {
  Vector embedding;  // unit norm
  TopKPrediction topk;
  double score = 0.0;
  StageTimings timings;
};

// Classifier -> uncertainty score -> threshold -> (optional) LLM gate. Immutable after
// construction; classify() is safe to call concurrently if the backends are.
class Pipeline {
 public:
  Pipeline(IntentCatalog catalog, ClassifierModel classifier, std::optional<NnkDictionary> dictionary,
           PipelineOptions options, std::shared_ptr<EmbedBackend> embedder,
           std::shared_ptr<GenerateBackend> generator, PromptTemplate tmpl = PromptTemplate::default_gate());

  ClassifyResponse classify(const std::string& text) const;
  // Bypasses the embed backend. `embedding` is normalized here.
  ClassifyResponse classify_embedding(const Vector& embedding, const std::string& text = {}) const;

  Assessment assess(const Vector& embedding) const;
  // Applies `strategy` to an assessment; escalations call the gate.
  ClassifyResponse resolve(const std::string& text, const Assessment& assessment,
                           const RoutingStrategy& strategy) const;

  // Re-binds the generate backend and strategy, sharing the loaded artifacts.
  Pipeline with(const RoutingStrategy& strategy) const;

  const IntentCatalog& catalog() const noexcept { return *catalog_; }
  const ClassifierModel& classifier() const noexcept { return *classifier_; }
  const PipelineOptions& options() const noexcept { return options_; }
  EmbedBackend* embedder() const noexcept { return embedder_.get(); }
  GenerateBackend* generator() const noexcept { return generator_.get(); }

 private:
  std::shared_ptr<const IntentCatalog> catalog_;
  std::shared_ptr<const ClassifierModel> classifier_;
  std::shared_ptr<const NnkDictionary> dictionary_;
  std::shared_ptr<const PromptTemplate> template_;
  PipelineOptions options_;
  std::shared_ptr<EmbedBackend> embedder_;
  std::shared_ptr<GenerateBackend> generator_;
};

}  // namespace intentgate
